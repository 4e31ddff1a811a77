"""Output surface of a small random fully connected net over a 2-D input grid."""

from __future__ import annotations

import numpy as np

from tanhexp.activations import ActivationKind
from tanhexp.core import Rng
from tanhexp.nn import Activation, Dense, Model

WIDTH = 16
DEPTH = 5  # dense layers: 2 -> 16 -> 16 -> 16 -> 16 -> 1
EXTENT = 3.0


def landscape_net(kind: ActivationKind, seed: int = 0, width: int = WIDTH) -> Model:
    """Glorot-uniform weights and U(-1, 1) biases; the draws depend only on ``seed``."""
    rng = Rng(seed)
    sizes = [2] + [width] * (DEPTH - 1) + [1]
    layers = []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        dense = Dense(n_in, n_out, rng)
        dense.b.value[...] = rng.uniform(-1.0, 1.0, 1, n_out)
        layers.append(dense)
        if i < DEPTH - 1:
            layers.append(Activation(kind))
    return Model(layers)


def grid_axis(n: int, extent: float = EXTENT) -> np.ndarray:
    if n < 2:
        raise ValueError("grid size must be >= 2")
    return np.linspace(-extent, extent, n)


def landscape(kind: ActivationKind, n: int = 101, seed: int = 0, extent: float = EXTENT) -> np.ndarray:
    """Rows ``(x, y, z)`` for every point of an n x n grid on [-extent, extent]^2, x varying fastest."""
    axis = grid_axis(n, extent)
    xx, yy = np.meshgrid(axis, axis)
    points = np.column_stack([xx.ravel(), yy.ravel()])
    z = landscape_net(kind, seed).eval().forward(points)
    return np.column_stack([points, z[:, 0]])
