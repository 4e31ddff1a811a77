"""Per-call timing of the scalar activation kernels and their derivatives.

Each kernel runs over a fixed array of U(-5, 5) inputs: an untimed warmup on
the first 10% of them, then ``passes`` timed passes over all of them. The sum
of outputs is kept as a checksum so no call can be skipped. Per-call time is
pass wall time divided by the number of inputs; timings are only
meaningful relative to each other on one machine.
"""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import asdict, dataclass
from typing import Iterable, TextIO

from tanhexp.activations import ALL_KINDS, ActivationKind, scalar_function, scalar_prime, scalar_second
from tanhexp.core import Rng
from tanhexp.errors import UnsupportedKindError

VARIANTS = ("forward", "first_derivative", "second_derivative")
DEFAULT_ITERATIONS = 100_000
DEFAULT_PASSES = 10
INPUT_RANGE = (-5.0, 5.0)
CSV_FIELDS = ("function", "variant", "iterations", "mean_ns", "stddev_ns", "checksum")


@dataclass
class BenchResult:
    function: str
    variant: str
    iterations: int
    mean_ns: float
    stddev_ns: float
    checksum: float


def kernel(kind: ActivationKind, variant: str):
    if variant == "forward":
        return scalar_function(kind)
    if variant == "first_derivative":
        return scalar_prime(kind)
    if variant == "second_derivative":
        return scalar_second(kind)
    raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")


def bench_inputs(rng: Rng, iterations: int) -> list[float]:
    return rng.uniform(*INPUT_RANGE, 1, iterations).reshape(-1).tolist()


def _timed_pass(fn, xs) -> tuple[int, float]:
    start = time.perf_counter_ns()
    acc = sum(map(fn, xs))
    return time.perf_counter_ns() - start, acc


def _result(kind, variant, iterations, elapsed_ns: list[int], checksum: float) -> BenchResult:
    per_call = [max(e, 1) / iterations for e in elapsed_ns]
    stddev = statistics.stdev(per_call) if len(per_call) > 1 else 0.0
    return BenchResult(str(kind), variant, iterations, statistics.fmean(per_call), stddev, checksum)


def bench_kernel(kind: ActivationKind, variant: str, iterations: int = DEFAULT_ITERATIONS,
                 rng: Rng | None = None, passes: int = DEFAULT_PASSES) -> BenchResult:
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if kind.name == "relu" and variant == "second_derivative":
        raise UnsupportedKindError("relu second derivative is identically zero and is not benchmarked")
    fn = kernel(kind, variant)
    xs = bench_inputs(rng if rng is not None else Rng(0), iterations)
    _timed_pass(fn, xs[: max(1, iterations // 10)])
    elapsed, checksum = [], 0.0
    for _ in range(passes):
        ns, checksum = _timed_pass(fn, xs)
        elapsed.append(ns)
    return _result(kind, variant, iterations, elapsed, checksum)


def suite_pairs(kinds: Iterable[ActivationKind] = ALL_KINDS):
    for variant in VARIANTS:
        for kind in kinds:
            if kind.name == "relu" and variant == "second_derivative":
                continue
            yield kind, variant


def bench_suite(iterations: int = DEFAULT_ITERATIONS, seed: int = 0,
                passes: int = DEFAULT_PASSES) -> list[BenchResult]:
    """All kind x variant pairs except relu's second derivative, on one shared input array.

    Passes are interleaved round-robin across kernels so that slow drifts in
    machine load hit every kernel alike.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    pairs = list(suite_pairs())
    fns = [kernel(kind, variant) for kind, variant in pairs]
    xs = bench_inputs(Rng(seed), iterations)
    for fn in fns:
        _timed_pass(fn, xs[: max(1, iterations // 10)])
    elapsed: list[list[int]] = [[] for _ in pairs]
    checksums = [0.0] * len(pairs)
    for _ in range(passes):
        for i, fn in enumerate(fns):
            ns, checksums[i] = _timed_pass(fn, xs)
            elapsed[i].append(ns)
    return [_result(kind, variant, iterations, elapsed[i], checksums[i])
            for i, (kind, variant) in enumerate(pairs)]


def write_csv(results: list[BenchResult], f: TextIO, provenance: dict | None = None) -> None:
    for key, value in (provenance or {}).items():
        f.write(f"# {key}={value}\n")
    writer = csv.writer(f, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in results:
        writer.writerow([r.function, r.variant, r.iterations, repr(r.mean_ns), repr(r.stddev_ns), repr(r.checksum)])


def read_csv(f: TextIO) -> list[BenchResult]:
    rows = csv.DictReader(line for line in f if not line.startswith("#"))
    return [BenchResult(r["function"], r["variant"], int(r["iterations"]), float(r["mean_ns"]),
                        float(r["stddev_ns"]), float(r["checksum"])) for r in rows]


def as_dicts(results: list[BenchResult]) -> list[dict]:
    return [asdict(r) for r in results]
