"""Finite-difference verification of activation derivatives and network backprop."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from tanhexp.activations import ActivationKind, mish, mish_prime, scalar_function, scalar_prime
from tanhexp.core import Rng
from tanhexp.nn import Activation, BatchNorm, Dense, Dropout, Model, softmax_cross_entropy

SCALAR_STEP = 1e-5
SCALAR_TOLERANCE = 1e-6
CLOSED_FORM_TOLERANCE = 1e-9
NETWORK_STEP = 1e-5
NETWORK_TOLERANCE = 1e-5
# central-difference roundoff is ~1e-10 for an O(1) loss at h=1e-5; below this floor errors are absolute
RELATIVE_FLOOR = 1e-4


def grid(lo: float = -5.0, hi: float = 5.0, step: float = 0.01) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def central_difference(f: Callable[[float], float], x: float, h: float = SCALAR_STEP) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)


def richardson_derivative(f: Callable[[float], float], x: float, h: float = 1e-3) -> float:
    """Central difference extrapolated from steps h and h/2 (error O(h^4))."""
    coarse = central_difference(f, x, h)
    fine = central_difference(f, x, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def scalar_max_deviation(kind: ActivationKind, prime: Callable[[float], float] | None = None,
                         h: float = SCALAR_STEP) -> float:
    """max |f'(x) - central difference| over the grid [-5, 5] step 0.01."""
    f = scalar_function(kind)
    prime = prime or scalar_prime(kind)
    return max(abs(prime(x) - central_difference(f, x, h)) for x in grid().tolist())


def mish_closed_form_deviation() -> float:
    """max |closed-form Mish derivative - extrapolated numeric derivative of x tanh(ln(1+e^x))|."""
    return max(abs(mish_prime(x) - richardson_derivative(mish, x)) for x in grid().tolist())


def tiny_net(kind: ActivationKind, rng: Rng, n_in: int = 784, width: int = 8, n_out: int = 10,
             dropout: float = 0.25) -> Model:
    return Model([
        Dense(n_in, width, rng), BatchNorm(width), Activation(kind), Dropout(dropout),
        Dense(width, width, rng), BatchNorm(width), Activation(kind), Dropout(dropout),
        Dense(width, n_out, rng),
    ])


@dataclass
class NetworkCheck:
    activation: str
    max_relative_error: float
    parameters_checked: int


def network_check(kind: ActivationKind, seed: int = 0, batch: int = 8,
                  h: float = NETWORK_STEP) -> NetworkCheck:
    """Compare every parameter gradient of a train-mode tiny net with central differences.

    Dropout masks are frozen by reseeding the mask stream for every forward.
    Gammas and betas are jittered away from 1 and 0 so their gradients are generic.
    """
    rng = Rng(seed)
    model = tiny_net(kind, rng).train()
    for layer in model.layers:
        if isinstance(layer, BatchNorm):
            layer.gamma.value[...] = rng.uniform(0.5, 1.5, 1, layer.features)
            layer.beta.value[...] = rng.uniform(-0.5, 0.5, 1, layer.features)
    x = rng.uniform(0.0, 1.0, batch, 784)
    y = (rng.random(batch) * 10).astype(np.int64)
    mask_seed = seed + 1

    def loss() -> float:
        return softmax_cross_entropy(model.forward(x, Rng(mask_seed)), y)[0].loss

    _, grad = softmax_cross_entropy(model.forward(x, Rng(mask_seed)), y)
    model.backward(grad)

    worst, count = 0.0, 0
    for p in model.parameters():
        analytic = p.grad.copy()
        flat = p.value.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss()
            flat[i] = orig - h
            down = loss()
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            a = analytic.reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), RELATIVE_FLOOR)
            worst = max(worst, err)
            count += 1
    model.zero_grad()
    return NetworkCheck(str(kind), worst, count)
