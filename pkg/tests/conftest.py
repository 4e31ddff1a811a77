import os
from pathlib import Path

import numpy as np
import pytest

from tanhexp.core import Rng
from tanhexp.data import FILES, write_idx_images, write_idx_labels

MNIST_DIR_ENV = "TANHEXP_DATA_DIR"


def _has_mnist(root: Path) -> bool:
    for base in (root / "mnist", root):
        if all((base / f).exists() or (base / (f + ".gz")).exists() for pair in FILES.values() for f in pair):
            return True
    return False


@pytest.fixture(scope="session")
def mnist_dir():
    root = os.environ.get(MNIST_DIR_ENV)
    if not root or not _has_mnist(Path(root)):
        pytest.skip(f"set {MNIST_DIR_ENV} to a directory holding the MNIST IDX files")
    return Path(root)


def make_toy_idx(root: Path, n_train=64, n_test=32, seed=0, name="mnist", compress=False) -> Path:
    """Write a small synthetic MNIST-format dataset whose class is encoded in a pixel block."""
    rng = Rng(seed)
    target = root / name
    target.mkdir(parents=True, exist_ok=True)
    for split, n in (("train", n_train), ("test", n_test)):
        labels = (rng.random(n) * 10).astype(np.uint8)
        pixels = (rng.random(n * 784).reshape(n, 784) * 60).astype(np.uint8)
        for i, c in enumerate(labels.tolist()):
            pixels[i, 70 * c : 70 * c + 70] = 255
        img_name, lbl_name = FILES[split]
        suffix = ".gz" if compress else ""
        write_idx_images(target / (img_name + suffix), pixels, compress=compress)
        write_idx_labels(target / (lbl_name + suffix), labels, compress=compress)
    return root


@pytest.fixture
def toy_data_dir(tmp_path):
    return make_toy_idx(tmp_path)


# --- acceptance criterion reporting -------------------------------------------

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "status": [], "notes": []})
    if rep.when == "call" or rep.outcome != "passed":
        entry["status"].append(rep.outcome)
    if rep.when == "call":
        entry["notes"] += [value for key, value in item.user_properties if key == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = entry["status"]
        verdict = "FAIL" if "failed" in status else "SKIP" if "skipped" in status else "PASS"
        notes = "; ".join(entry["notes"])
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {entry['title']}" + (f"  [{notes}]" if notes else ""))


@pytest.fixture
def measured(record_property):
    """Attach a measured value to the acceptance summary line."""
    return lambda text: record_property("measured", text)
