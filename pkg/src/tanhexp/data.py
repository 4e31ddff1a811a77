"""IDX loading for MNIST, Fashion-MNIST and KMNIST, minibatching, and mirror downloads.

All three datasets ship the same four IDX files, optionally gzip-compressed:
``train-images-idx3-ubyte``, ``train-labels-idx1-ubyte``,
``t10k-images-idx3-ubyte``, ``t10k-labels-idx1-ubyte``.
"""

from __future__ import annotations

import gzip
import json
import os
import shutil
import struct
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from tanhexp.core import Rng
from tanhexp.errors import DataError, FormatError, ShapeError, TruncatedFileError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_SIDE = 28
NUM_CLASSES = 10
DATASETS = ("mnist", "fashion", "kmnist")

FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}

MIRROR_ENV = "TANHEXP_DATA_MIRROR"
DEFAULT_MIRRORS = {
    "mnist": "https://storage.googleapis.com/cvdf-datasets/mnist",
    "fashion": "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com",
    "kmnist": "http://codh.rois.ac.jp/kmnist/dataset/kmnist",
}


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray  # (n, 784) float64 in [0, 1]
    labels: np.ndarray  # (n,) uint8
    name: str = "mnist"

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ShapeError(f"{self.images.shape[0]} images but {self.labels.shape[0]} labels")

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, n: int | None) -> "Dataset":
        if n is None or n >= len(self):
            return self
        return Dataset(self.images[:n], self.labels[:n], self.name)


@dataclass
class Batch:
    x: np.ndarray
    y: np.ndarray


def _read_bytes(path) -> bytes:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _header(raw: bytes, path, expected_magic: int, ndims: int) -> tuple[int, ...]:
    if len(raw) < 4 + 4 * ndims:
        raise TruncatedFileError(f"{path}: {len(raw)} bytes is too short for an IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise FormatError(f"{path}: magic 0x{magic:08X}, expected 0x{expected_magic:08X}")
    return struct.unpack(f">{ndims}I", raw[4 : 4 + 4 * ndims])


def load_idx_images(path) -> np.ndarray:
    """Read an IDX image file into an (n, 784) float64 matrix scaled to [0, 1]."""
    raw = _read_bytes(path)
    n, rows, cols = _header(raw, path, IMAGE_MAGIC, 3)
    if (rows, cols) != (IMAGE_SIDE, IMAGE_SIDE):
        raise ShapeError(f"{path}: images are {rows}x{cols}, expected {IMAGE_SIDE}x{IMAGE_SIDE}")
    body = raw[16:]
    need = n * rows * cols
    if len(body) < need:
        raise TruncatedFileError(f"{path}: expected {need} pixel bytes, found {len(body)}")
    pixels = np.frombuffer(body, dtype=np.uint8, count=need).reshape(n, rows * cols)
    return pixels.astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    raw = _read_bytes(path)
    (n,) = _header(raw, path, LABEL_MAGIC, 1)
    body = raw[8:]
    if len(body) < n:
        raise TruncatedFileError(f"{path}: expected {n} label bytes, found {len(body)}")
    labels = np.frombuffer(body, dtype=np.uint8, count=n).copy()
    if n and labels.max() >= NUM_CLASSES:
        raise FormatError(f"{path}: label {labels.max()} out of range")
    return labels


def _open_write(path, compress: bool):
    return gzip.open(path, "wb") if compress else open(path, "wb")


def write_idx_images(path, images: np.ndarray, compress: bool = False) -> None:
    """Write (n, 784) pixels in [0, 1] (or uint8) as an IDX image file."""
    pixels = images if images.dtype == np.uint8 else np.rint(np.asarray(images) * 255.0).astype(np.uint8)
    n = pixels.shape[0]
    with _open_write(path, compress) as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, IMAGE_SIDE, IMAGE_SIDE))
        f.write(pixels.reshape(n, -1).tobytes())


def write_idx_labels(path, labels, compress: bool = False) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    with _open_write(path, compress) as f:
        f.write(struct.pack(">II", LABEL_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())


def _candidates(data_dir: Path, name: str, filename: str) -> list[Path]:
    out = []
    for base in (data_dir / name, data_dir):
        out += [base / filename, base / (filename + ".gz")]
    return out


def expected_paths(data_dir, name: str) -> list[Path]:
    data_dir = Path(data_dir)
    return [data_dir / name / f for pair in FILES.values() for f in pair]


def _locate(data_dir: Path, name: str, filename: str) -> Path:
    for p in _candidates(data_dir, name, filename):
        if p.is_file():
            return p
    raise DataError(
        f"missing {name} file {filename}; looked for "
        + ", ".join(str(p) for p in _candidates(data_dir, name, filename))
        + f" (run `tanhexp fetch --dataset {name} --data-dir {data_dir}`)"
    )


def load_split(data_dir, name: str, split: str) -> Dataset:
    if name not in DATASETS:
        raise ValueError(f"unknown dataset {name!r}; choose from {DATASETS}")
    data_dir = Path(data_dir)
    img_file, lbl_file = FILES[split]
    images = load_idx_images(_locate(data_dir, name, img_file))
    labels = load_idx_labels(_locate(data_dir, name, lbl_file))
    return Dataset(images, labels, name)


def load_dataset(data_dir, name: str = "mnist") -> tuple[Dataset, Dataset]:
    """Return (train, test) splits of ``name`` found under ``data_dir``."""
    return load_split(data_dir, name, "train"), load_split(data_dir, name, "test")


def batches(ds: Dataset, batch_size: int, rng: Rng | None = None, shuffle: bool = False,
            drop_singleton: bool = False) -> Iterator[Batch]:
    """Yield minibatches covering every sample once.

    With ``drop_singleton`` a trailing batch of size 1 is skipped (batchnorm
    cannot train on it); shorter trailing batches are always kept.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    n = len(ds)
    order = rng.permutation(n) if shuffle else np.arange(n)
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        if drop_singleton and idx.size == 1:
            continue
        yield Batch(ds.images[idx], ds.labels[idx])


def mirror_for(name: str, config_path=None) -> str:
    """Resolve the download base URL: env var, then JSON config ``{name: url}``, then defaults."""
    env = os.environ.get(MIRROR_ENV)
    if env:
        return f"{env.rstrip('/')}/{name}"
    if config_path is not None:
        with open(config_path) as f:
            cfg = json.load(f)
        if name in cfg:
            return cfg[name].rstrip("/")
    return DEFAULT_MIRRORS[name]


def fetch(name: str, data_dir, base_url: str | None = None, config_path=None) -> list[Path]:
    """Download the four gzipped IDX files of ``name`` into ``data_dir/name``."""
    if name not in DATASETS:
        raise ValueError(f"unknown dataset {name!r}")
    base = (base_url or mirror_for(name, config_path)).rstrip("/")
    target = Path(data_dir) / name
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for pair in FILES.values():
        for filename in pair:
            dest = target / (filename + ".gz")
            url = f"{base}/{filename}.gz"
            tmp = dest.with_suffix(".part")
            with urllib.request.urlopen(url, timeout=60) as resp, open(tmp, "wb") as out:
                shutil.copyfileobj(resp, out)
            tmp.replace(dest)
            written.append(dest)
    return written
