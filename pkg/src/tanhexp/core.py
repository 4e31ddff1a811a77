"""Numeric substrate: float64 matrices and a reproducible random stream.

A ``Matrix`` is a C-contiguous 2-D ``numpy.ndarray`` of ``float64`` (batch x
features). The random generator is SplitMix64 in counter form, so every draw
can be reproduced bit-for-bit from the seed and the number of words consumed:

    state_k = seed + k * 0x9E3779B97F4A7C15        (mod 2**64), k = 1, 2, ...
    z = state_k
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9       (mod 2**64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB       (mod 2**64)
    word_k = z ^ (z >> 31)

Uniform doubles are ``(word >> 11) * 2**-53`` in [0, 1). Normal samples use
Box-Muller on consecutive uniform pairs (u1, u2):
``r = sqrt(-2 ln(1 - u1))``, emitting ``r cos(2 pi u2)`` then ``r sin(2 pi u2)``.
"""

from __future__ import annotations

import numba
import numpy as np

from tanhexp.errors import ShapeError

Matrix = np.ndarray

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53


def as_matrix(x) -> Matrix:
    """Coerce ``x`` to a 2-D float64 matrix (1-D input becomes a single row)."""
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


@numba.njit(cache=True)
def _splitmix_words(state, n):  # pragma: no cover
    out = np.empty(n, dtype=np.uint64)
    s = state
    for k in range(n):
        s += _GAMMA
        z = s
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        out[k] = z ^ (z >> np.uint64(31))
    return out


@numba.njit(cache=True)
def _splitmix_doubles(state, n):  # pragma: no cover
    out = np.empty(n, dtype=np.float64)
    s = state
    for k in range(n):
        s += _GAMMA
        z = s
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
        out[k] = np.float64(z >> np.uint64(11)) * _TWO_M53
    return out


class Rng:
    """Seeded SplitMix64 stream. Single owner; not safe to share across threads."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.state = int(seed) & _MASK64

    def next_words(self, n: int) -> np.ndarray:
        """Return the next ``n`` raw 64-bit words and advance the state."""
        return _splitmix_words(np.uint64(self._advance(n)), int(n))

    def random(self, n: int) -> np.ndarray:
        """``n`` uniform doubles in [0, 1) as a flat array."""
        return _splitmix_doubles(np.uint64(self._advance(n)), int(n))

    def _advance(self, n) -> int:
        """Reserve ``n`` words; returns the state they are generated from."""
        if int(n) < 0:
            raise ValueError("word count must be non-negative")
        start = self.state
        self.state = (start + int(n) * int(_GAMMA)) & _MASK64
        return start

    def uniform(self, lo: float, hi: float, rows: int, cols: int) -> Matrix:
        if lo > hi:
            raise ValueError(f"uniform bounds out of order: lo={lo} > hi={hi}")
        u = self.random(rows * cols).reshape(rows, cols)
        if lo == hi:
            return np.full((rows, cols), float(lo))
        out = lo + (hi - lo) * u
        # lo + (hi - lo) * u can round up to hi
        return np.minimum(out, np.nextafter(hi, lo))

    def normal(self, mean: float, stddev: float, rows: int, cols: int) -> Matrix:
        if stddev < 0:
            raise ValueError(f"stddev must be non-negative, got {stddev}")
        n = rows * cols
        pairs = (n + 1) // 2
        u = self.random(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = r * np.cos(theta)
        z[:, 1] = r * np.sin(theta)
        return mean + stddev * z.reshape(-1)[:n].reshape(rows, cols)

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of ``range(n)``: stable argsort of ``n`` uniform draws."""
        return np.argsort(self.random(n), kind="stable")


def rng_normal(rng: Rng, mean: float, stddev: float, rows: int, cols: int) -> Matrix:
    return rng.normal(mean, stddev, rows, cols)


def rng_uniform(rng: Rng, lo: float, hi: float, rows: int, cols: int) -> Matrix:
    return rng.uniform(lo, hi, rows, cols)
