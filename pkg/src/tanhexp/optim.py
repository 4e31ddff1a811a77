from __future__ import annotations

import numba
import numpy as np

from tanhexp.errors import StateError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


class Optimizer:
    def __init__(self, learning_rate: float):
        if learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        self.learning_rate = float(learning_rate)

    def step(self, model) -> None:
        """Apply one update from the gradients of the last backward pass, then zero them."""
        if not model.grads_ready:
            raise StateError("optimizer step requested before a backward pass")
        for i, p in enumerate(model.parameters()):
            self._update(i, p)
        model.zero_grad()

    def _update(self, index, param) -> None:
        raise NotImplementedError


class SGD(Optimizer):
    """w_new = w_old - learning_rate * grad."""

    def _update(self, index, param):
        param.value -= self.learning_rate * param.grad


class Adam(Optimizer):
    def __init__(self, learning_rate: float = 1e-3, beta1: float = ADAM_BETA1,
                 beta2: float = ADAM_BETA2, epsilon: float = ADAM_EPSILON):
        super().__init__(learning_rate)
        self.beta1, self.beta2, self.epsilon = beta1, beta2, epsilon
        self.t = 0
        self.m: dict[int, np.ndarray] = {}
        self.v: dict[int, np.ndarray] = {}

    def step(self, model):
        if model.grads_ready:
            self.t += 1
        super().step(model)

    def _update(self, index, param):
        if index not in self.m:
            self.m[index] = np.zeros(param.value.size)
            self.v[index] = np.zeros(param.value.size)
        _adam_kernel(param.value.reshape(-1), param.grad.reshape(-1), self.m[index], self.v[index],
                     self.beta1, self.beta2, self.learning_rate / (1.0 - self.beta1**self.t),
                     1.0 - self.beta2**self.t, self.epsilon)


@numba.njit(cache=True)
def _adam_kernel(value, grad, m, v, beta1, beta2, lr_corrected, bias2, epsilon):  # pragma: no cover
    # value -= lr * m_hat / (sqrt(v_hat) + eps), with lr_corrected = lr / (1 - beta1**t)
    for i in range(value.size):
        g = grad[i]
        mi = beta1 * m[i] + (1.0 - beta1) * g
        vi = beta2 * v[i] + (1.0 - beta2) * (g * g)
        m[i] = mi
        v[i] = vi
        value[i] -= lr_corrected * mi / (np.sqrt(vi / bias2) + epsilon)


def make_optimizer(name: str, learning_rate: float | None = None) -> Optimizer:
    if name == "adam":
        return Adam(1e-3 if learning_rate is None else learning_rate)
    if name == "sgd":
        return SGD(0.01 if learning_rate is None else learning_rate)
    raise ValueError(f"unknown optimizer {name!r}")
