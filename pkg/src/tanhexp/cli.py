"""Command-line entry point: ``tanhexp {train,bench,gradcheck,landscape,fetch}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
Every CSV starts with ``# key=value`` lines describing the run.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import os
import shlex
import sys
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

from tanhexp import bench, checkpoint, gradcheck
from tanhexp.activations import ALL_KINDS, ActivationKind, scalar_prime
from tanhexp.core import Rng
from tanhexp.data import DATASETS, fetch, load_dataset
from tanhexp.errors import DataError, FormatError, ShapeError
from tanhexp.landscape import landscape
from tanhexp.nn import build_mnist_net
from tanhexp.optim import make_optimizer
from tanhexp.train import MetricsRecord, fit

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3
DATA_DIR_ENV = "TANHEXP_DATA_DIR"

log = logging.getLogger("tanhexp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    subcommand: str
    dataset: str = "mnist"
    data_dir: str = "data"
    activation: str = "tanhexp"
    num_blocks: int = 12
    epochs: int = 20
    batch_size: int = 128
    learning_rate: float | None = None
    optimizer: str = "adam"
    noise: str = "none"
    alpha_rate: float = 0.2
    subset: int | None = None
    seed: int = 42
    output: str = "-"

    def provenance(self) -> dict:
        out = asdict(self)
        out["command"] = self.command()
        return out

    def command(self) -> str:
        args = ["tanhexp", "train", "--dataset", self.dataset, "--data-dir", self.data_dir,
                "--activation", self.activation, "--blocks", str(self.num_blocks),
                "--epochs", str(self.epochs), "--batch-size", str(self.batch_size),
                "--optimizer", self.optimizer, "--noise", self.noise,
                "--alpha-rate", str(self.alpha_rate), "--seed", str(self.seed), "--out", self.output]
        if self.learning_rate is not None:
            args += ["--lr", str(self.learning_rate)]
        if self.subset is not None:
            args += ["--subset", str(self.subset)]
        return shlex.join(args)


def write_provenance(f, items: dict) -> None:
    for key, value in items.items():
        f.write(f"# {key}={value}\n")


@contextlib.contextmanager
def _output(path: str):
    if path == "-":
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", newline="") as f:
            yield f


def _kind(text: str) -> ActivationKind:
    try:
        return ActivationKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _default_data_dir() -> str:
    return os.environ.get(DATA_DIR_ENV, "data")


# --- train ------------------------------------------------------------------

def config_from_args(args) -> RunConfig:
    return RunConfig(
        subcommand="train", dataset=args.dataset, data_dir=str(args.data_dir),
        activation=str(args.activation), num_blocks=args.blocks, epochs=args.epochs,
        batch_size=args.batch_size, learning_rate=args.lr, optimizer=args.optimizer,
        noise=args.noise, alpha_rate=args.alpha_rate, subset=args.subset, seed=args.seed,
        output=args.out,
    )


def run_training(config: RunConfig, out, checkpoint_path=None) -> list[MetricsRecord]:
    """Train per ``config``, streaming one CSV row per epoch to ``out``."""
    if config.noise == "alpha" and config.alpha_rate >= 0.25:
        warnings.warn(f"alpha dropout rate {config.alpha_rate} >= 0.25 rarely converges; continuing")
    train_set, test_set = load_dataset(config.data_dir, config.dataset)
    train_set = train_set.subset(config.subset)
    rng = Rng(config.seed)
    model = build_mnist_net(ActivationKind.parse(config.activation), config.num_blocks, rng,
                            noise=config.noise, alpha_rate=config.alpha_rate)
    optimizer = make_optimizer(config.optimizer, config.learning_rate)

    write_provenance(out, config.provenance())
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MetricsRecord.FIELDS)
    out.flush()
    records = []
    for record in fit(model, train_set, test_set, optimizer, rng, config.epochs, config.batch_size):
        writer.writerow(record.row())
        out.flush()
        records.append(record)
    if checkpoint_path:
        checkpoint.save(checkpoint_path, model)
    return records


def cmd_train(args) -> int:
    config = config_from_args(args)
    if config.epochs < 0 or config.num_blocks < 1 or config.batch_size < 2:
        raise UsageError("need --epochs >= 0, --blocks >= 1 and --batch-size >= 2")
    with _output(config.output) as out:
        records = run_training(config, out, args.checkpoint)
    msg = (f"final test accuracy {records[-1].test_accuracy:.4f} after {len(records)} epochs"
           if records else "no epochs run")
    print(msg, file=sys.stderr if config.output == "-" else sys.stdout)
    return EXIT_OK


# --- bench ------------------------------------------------------------------

def cmd_bench(args) -> int:
    if args.iters < 1 or args.passes < 1:
        raise UsageError("--iters and --passes must be >= 1")
    results = bench.bench_suite(args.iters, args.seed, args.passes)
    with _output(args.out) as out:
        bench.write_csv(results, out, {"subcommand": "bench", "iterations": args.iters,
                                       "passes": args.passes, "seed": args.seed,
                                       "command": f"tanhexp bench --iters {args.iters} --passes {args.passes} --seed {args.seed}"})
    return EXIT_OK


# --- gradcheck --------------------------------------------------------------

def _selected(text: str) -> tuple[ActivationKind, ...]:
    return ALL_KINDS if text == "all" else (ActivationKind.parse(text),)


def cmd_gradcheck(args) -> int:
    kinds = _selected(args.activation)
    failed = False
    for kind in kinds:
        prime = scalar_prime(kind)
        if args.corrupt_derivative == kind.name:
            clean = prime
            prime = lambda x, clean=clean: clean(x) + 1e-3  # noqa: E731
        dev = gradcheck.scalar_max_deviation(kind, prime)
        ok = dev < gradcheck.SCALAR_TOLERANCE
        failed |= not ok
        print(f"scalar    {kind!s:8} max_abs_dev={dev:.3e} tol={gradcheck.SCALAR_TOLERANCE:g} {'PASS' if ok else 'FAIL'}")
        if kind.name == "mish":
            dev = gradcheck.mish_closed_form_deviation()
            ok = dev < gradcheck.CLOSED_FORM_TOLERANCE
            failed |= not ok
            print(f"closed    {kind!s:8} max_abs_dev={dev:.3e} tol={gradcheck.CLOSED_FORM_TOLERANCE:g} {'PASS' if ok else 'FAIL'}")
    if not args.skip_network:
        for kind in kinds:
            res = gradcheck.network_check(kind, args.seed)
            ok = res.max_relative_error < gradcheck.NETWORK_TOLERANCE
            failed |= not ok
            print(f"network   {kind!s:8} max_rel_err={res.max_relative_error:.3e} "
                  f"tol={gradcheck.NETWORK_TOLERANCE:g} params={res.parameters_checked} {'PASS' if ok else 'FAIL'}")
    return EXIT_VERIFY if failed else EXIT_OK


# --- landscape --------------------------------------------------------------

def cmd_landscape(args) -> int:
    if args.grid < 2:
        raise UsageError("--grid must be >= 2")
    kinds = args.activation or list(ALL_KINDS)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for kind in kinds:
        rows = landscape(kind, args.grid, args.seed)
        path = out_dir / f"landscape_{kind}.csv"
        with open(path, "w", newline="") as f:
            write_provenance(f, {"subcommand": "landscape", "activation": kind, "grid": args.grid,
                                 "seed": args.seed,
                                 "command": f"tanhexp landscape --activation {kind} --grid {args.grid} --seed {args.seed} --out-dir {shlex.quote(str(out_dir))}"})
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(("x", "y", "z"))
            writer.writerows((repr(x), repr(y), repr(z)) for x, y, z in rows.tolist())
        print(path)
    return EXIT_OK


# --- fetch ------------------------------------------------------------------

def cmd_fetch(args) -> int:
    names = DATASETS if args.dataset == "all" else (args.dataset,)
    for name in names:
        for path in fetch(name, args.data_dir, args.mirror, args.config):
            print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tanhexp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train the block network and write per-epoch metrics CSV")
    p.add_argument("--dataset", choices=DATASETS, default="mnist")
    p.add_argument("--data-dir", default=_default_data_dir())
    p.add_argument("--activation", type=_kind, default=ActivationKind("tanhexp"))
    p.add_argument("--blocks", type=int, default=12, help="number of BN/act/dropout/dense blocks")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=None, help="learning rate (adam 1e-3, sgd 1e-2)")
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--noise", choices=("none", "gaussian", "alpha"), default="none")
    p.add_argument("--alpha-rate", type=float, default=0.2)
    p.add_argument("--subset", type=int, default=None, help="train on the first N samples only")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="-", help="metrics CSV path ('-' for stdout)")
    p.add_argument("--checkpoint", default=None, help="write the trained model here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="time activation kernels and derivatives")
    p.add_argument("--iters", type=int, default=bench.DEFAULT_ITERATIONS)
    p.add_argument("--passes", type=int, default=bench.DEFAULT_PASSES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gradcheck", help="finite-difference checks of derivatives and backprop")
    p.add_argument("--activation", default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skip-network", action="store_true")
    p.add_argument("--corrupt-derivative", default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("landscape", help="grid of a random 5-layer net's output")
    p.add_argument("--activation", type=_kind, action="append")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("fetch", help="download IDX files from a mirror")
    p.add_argument("--dataset", choices=DATASETS + ("all",), default="mnist")
    p.add_argument("--data-dir", default=_default_data_dir())
    p.add_argument("--mirror", default=None, help="base URL holding the .gz files")
    p.add_argument("--config", default=None, help="JSON file mapping dataset name to base URL")
    p.set_defaults(func=cmd_fetch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        if isinstance(exc, (FormatError, ShapeError)):
            print(f"tanhexp: data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"tanhexp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"tanhexp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
