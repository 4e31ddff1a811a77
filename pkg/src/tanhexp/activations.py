"""TanhExp, Mish, Swish and ReLU: values, first derivatives, numeric second derivatives.

Scalar functions use :mod:`math`; the ``*_matrix`` variants are the numpy
kernels used by the network layers. The two agree to within a few ULP (libm
and numpy's vectorised exp/tanh are not bit-identical).
"""

from __future__ import annotations

import math
from math import exp, log1p, tanh
from dataclasses import dataclass
from typing import Callable

import numpy as np

from tanhexp.errors import UnsupportedKindError

# tanh(e**20) == 1.0 exactly in double precision; above this f(x) = x
EXP_CLAMP = 20.0
EXP_FLOOR = -800.0
SECOND_DERIVATIVE_STEP = 1e-5
SWISH_DEFAULT_BETA = 1.0

_NAMES = ("relu", "swish", "mish", "tanhexp")


@dataclass(frozen=True)
class ActivationKind:
    name: str
    beta: float = SWISH_DEFAULT_BETA

    def __post_init__(self):
        if self.name not in _NAMES:
            raise UnsupportedKindError(f"unknown activation {self.name!r}; choose from {_NAMES}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"swish beta must be finite and > 0, got {self.beta}")

    @classmethod
    def parse(cls, text: str) -> "ActivationKind":
        """Parse ``relu``, ``mish``, ``tanhexp``, ``swish`` or ``swish:<beta>``."""
        name, _, beta = text.strip().lower().partition(":")
        if beta and name != "swish":
            raise ValueError(f"only swish takes a beta parameter, got {text!r}")
        return cls(name, float(beta) if beta else SWISH_DEFAULT_BETA)

    def __str__(self) -> str:
        if self.name == "swish" and self.beta != SWISH_DEFAULT_BETA:
            return f"swish:{self.beta:g}"
        return self.name


RELU = ActivationKind("relu")
SWISH = ActivationKind("swish")
MISH = ActivationKind("mish")
TANHEXP = ActivationKind("tanhexp")
ALL_KINDS = (RELU, SWISH, MISH, TANHEXP)


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


# --- scalar kernels -------------------------------------------------------

def relu(x: float) -> float:
    return x if x > 0.0 else 0.0


def relu_prime(x: float) -> float:
    # 0.5 at the kink: the symmetric difference quotient there, and a valid subgradient
    if x == 0.0:
        return 0.5
    return 1.0 if x > 0.0 else 0.0


def swish(x: float, beta: float = SWISH_DEFAULT_BETA) -> float:
    return x * sigmoid(beta * x)


def swish_prime(x: float, beta: float = SWISH_DEFAULT_BETA) -> float:
    s = sigmoid(beta * x)
    return s + beta * x * s * (1.0 - s)


def mish(x: float) -> float:
    # tanh(softplus(x)) is exactly 1.0 long before exp overflows, so the fallback is exact
    try:
        return x * tanh(log1p(exp(x)))
    except OverflowError:
        return x


def mish_prime(x: float) -> float:
    """Closed form  e^x (4(x+1) + 4e^2x + e^3x + e^x (4x+6)) / (2e^x + e^2x + 2)^2."""
    if x > EXP_CLAMP:
        return 1.0
    # e^x underflows to 0 below EXP_FLOOR; clamping keeps 4x finite so 0 * 4x stays 0
    x = max(x, EXP_FLOOR)
    w = exp(x)
    w2 = w * w
    num = w * (4.0 * (x + 1.0) + 4.0 * w2 + w2 * w + w * (4.0 * x + 6.0))
    den = 2.0 * w + w2 + 2.0
    return num / (den * den)


def mish_prime_chain(x: float) -> float:
    """Chain-rule form tanh(sp) + x * sigmoid(x) * sech^2(sp), sp = softplus(x)."""
    if x > EXP_CLAMP:
        return 1.0
    t = tanh(log1p(exp(x)))
    return t + x * sigmoid(x) * (1.0 - t * t)


def tanhexp(x: float) -> float:
    try:
        return x * tanh(exp(x))
    except OverflowError:
        return x


def tanhexp_prime(x: float) -> float:
    """tanh(e^x) - x e^x (tanh^2(e^x) - 1), reusing tanh(e^x)."""
    if x > EXP_CLAMP:
        return 1.0
    e = exp(x)
    t = tanh(e)
    return t - x * e * (t * t - 1.0)


# --- vectorised kernels ----------------------------------------------------

def sigmoid_matrix(m: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(m))
    return np.where(m >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _tanhexp_m(m):
    return m * np.tanh(np.exp(np.minimum(m, EXP_CLAMP)))


def _tanhexp_prime_m(m):
    c = np.minimum(m, EXP_CLAMP)
    e = np.exp(c)
    t = np.tanh(e)
    return np.where(m > EXP_CLAMP, 1.0, t - c * e * (t * t - 1.0))


def _mish_m(m):
    return m * np.tanh(np.log1p(np.exp(np.minimum(m, EXP_CLAMP))))


def _mish_prime_m(m):
    c = np.clip(m, EXP_FLOOR, EXP_CLAMP)
    w = np.exp(c)
    w2 = w * w
    num = w * (4.0 * (c + 1.0) + 4.0 * w2 + w2 * w + w * (4.0 * c + 6.0))
    den = 2.0 * w + w2 + 2.0
    return np.where(m > EXP_CLAMP, 1.0, num / (den * den))


def _swish_m(m, beta):
    return m * sigmoid_matrix(beta * m)


def _swish_prime_m(m, beta):
    s = sigmoid_matrix(beta * m)
    return s + beta * m * s * (1.0 - s)


def _relu_m(m):
    return np.maximum(m, 0.0)


def _relu_prime_m(m):
    return (m > 0.0) + 0.5 * (m == 0.0)


# --- dispatch -------------------------------------------------------------

def scalar_function(kind: ActivationKind) -> Callable[[float], float]:
    if kind.name == "swish":
        beta = kind.beta
        return lambda x: swish(x, beta)
    return {"relu": relu, "mish": mish, "tanhexp": tanhexp}[kind.name]


def scalar_prime(kind: ActivationKind) -> Callable[[float], float]:
    if kind.name == "swish":
        beta = kind.beta
        return lambda x: swish_prime(x, beta)
    return {"relu": relu_prime, "mish": mish_prime, "tanhexp": tanhexp_prime}[kind.name]


def scalar_second(kind: ActivationKind) -> Callable[[float], float]:
    if kind.name == "relu":
        raise UnsupportedKindError("second derivative of relu is not provided (identically zero off the kink)")
    prime = scalar_prime(kind)
    h = SECOND_DERIVATIVE_STEP

    def second(x: float) -> float:
        return (prime(x + h) - prime(x - h)) / (2.0 * h)

    return second


def activate(kind: ActivationKind, x: float) -> float:
    return scalar_function(kind)(x)


def activate_prime(kind: ActivationKind, x: float) -> float:
    return scalar_prime(kind)(x)


def activate_second(kind: ActivationKind, x: float) -> float:
    """Central difference of the analytic first derivative, step 1e-5."""
    return scalar_second(kind)(x)


def activate_matrix(kind: ActivationKind, m: np.ndarray) -> np.ndarray:
    if kind.name == "tanhexp":
        return _tanhexp_m(m)
    if kind.name == "mish":
        return _mish_m(m)
    if kind.name == "swish":
        return _swish_m(m, kind.beta)
    return _relu_m(m)


def activate_prime_matrix(kind: ActivationKind, m: np.ndarray) -> np.ndarray:
    if kind.name == "tanhexp":
        return _tanhexp_prime_m(m)
    if kind.name == "mish":
        return _mish_prime_m(m)
    if kind.name == "swish":
        return _swish_prime_m(m, kind.beta)
    return _relu_prime_m(m)
