"""Layers with manual backpropagation, softmax cross-entropy and the MNIST block network.

Every layer caches what its backward pass needs during a training-mode forward
and drops the cache once backward has consumed it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tanhexp.activations import ActivationKind, activate_matrix, activate_prime_matrix
from tanhexp.core import Matrix, Rng, matmul
from tanhexp.errors import ShapeError, StateError

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772
ALPHA_PRIME = -SELU_LAMBDA * SELU_ALPHA

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9


class Param:
    """A trainable array and its accumulated gradient."""

    def __init__(self, value: np.ndarray):
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape


class Layer:
    def params(self) -> dict[str, Param]:
        return {}

    def forward(self, x: Matrix, training: bool = False, rng: Rng | None = None) -> Matrix:
        raise NotImplementedError

    def backward(self, grad_out: Matrix) -> Matrix:
        raise NotImplementedError

    def _take(self, name: str):
        cached = getattr(self, name)
        if cached is None:
            raise StateError(f"{type(self).__name__}.backward called without a preceding training forward")
        setattr(self, name, None)
        return cached


def glorot_uniform(rng: Rng, fan_in: int, fan_out: int) -> Matrix:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, fan_in, fan_out)


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int, rng: Rng | None = None):
        self.n_in, self.n_out = n_in, n_out
        w = glorot_uniform(rng, n_in, n_out) if rng is not None else np.zeros((n_in, n_out))
        self.W = Param(w)
        self.b = Param(np.zeros((1, n_out)))
        self._x = None

    def params(self):
        return {"W": self.W, "b": self.b}

    def forward(self, x, training=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeError(f"dense layer expects (batch, {self.n_in}), got {x.shape}")
        if training:
            self._x = x
        return matmul(x, self.W.value) + self.b.value

    def backward(self, grad_out, input_grad: bool = True):
        x = self._take("_x")
        self.W.grad += x.T @ grad_out
        self.b.grad += grad_out.sum(axis=0, keepdims=True)
        if not input_grad:
            return None
        return grad_out @ self.W.value.T


class BatchNorm(Layer):
    def __init__(self, features: int, epsilon: float = BN_EPSILON, momentum: float = BN_MOMENTUM):
        if epsilon <= 0:
            raise ValueError("batchnorm epsilon must be positive")
        self.features = features
        self.epsilon = epsilon
        self.momentum = momentum
        self.gamma = Param(np.ones((1, features)))
        self.beta = Param(np.zeros((1, features)))
        self.running_mean = np.zeros((1, features))
        self.running_var = np.ones((1, features))
        self._cache = None

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def forward(self, x, training=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.features:
            raise ShapeError(f"batchnorm expects (batch, {self.features}), got {x.shape}")
        if not training:
            xhat = (x - self.running_mean) / np.sqrt(self.running_var + self.epsilon)
            return self.gamma.value * xhat + self.beta.value
        if x.shape[0] < 2:
            raise ValueError("batchnorm needs at least 2 samples per batch in training mode")
        mean = x.mean(axis=0, keepdims=True)
        centered = x - mean
        var = (centered * centered).mean(axis=0, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        xhat = centered * inv_std
        m = self.momentum
        self.running_mean = m * self.running_mean + (1.0 - m) * mean
        self.running_var = m * self.running_var + (1.0 - m) * var
        self._cache = (xhat, inv_std)
        return self.gamma.value * xhat + self.beta.value

    def backward(self, grad_out):
        xhat, inv_std = self._take("_cache")
        self.gamma.grad += (grad_out * xhat).sum(axis=0, keepdims=True)
        self.beta.grad += grad_out.sum(axis=0, keepdims=True)
        g = grad_out * self.gamma.value
        n = g.shape[0]
        return inv_std / n * (n * g - g.sum(axis=0, keepdims=True) - xhat * (g * xhat).sum(axis=0, keepdims=True))


class Activation(Layer):
    def __init__(self, kind: ActivationKind):
        self.kind = kind
        self._x = None

    def forward(self, x, training=False, rng=None):
        if training:
            self._x = x
        return activate_matrix(self.kind, x)

    def backward(self, grad_out):
        return grad_out * activate_prime_matrix(self.kind, self._take("_x"))


class _Noise(Layer):
    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = float(rate)
        self._scale = None

    def _noise(self, shape, rng: Rng) -> np.ndarray:
        raise NotImplementedError

    def forward(self, x, training=False, rng=None):
        if not training or self.rate == 0.0:
            if training:
                self._scale = 1.0
            return x
        if rng is None:
            raise StateError(f"{type(self).__name__} needs an Rng in training mode")
        self._scale = self._noise(x.shape, rng)
        return x * self._scale

    def backward(self, grad_out):
        return grad_out * self._take("_scale")


class Dropout(_Noise):
    """Inverted dropout: keep with probability 1 - rate, scale kept units by 1 / (1 - rate)."""

    def _noise(self, shape, rng):
        keep = 1.0 - self.rate
        u = rng.random(shape[0] * shape[1]).reshape(shape)
        return (u < keep) * (1.0 / keep)


class GaussianDropout(_Noise):
    """Multiplicative N(1, stddev^2) noise with stddev = rate / (1 - rate)."""

    @property
    def stddev(self) -> float:
        return self.rate / (1.0 - self.rate)

    def _noise(self, shape, rng):
        return rng.normal(1.0, self.stddev, shape[0], shape[1])


class AlphaDropout(Layer):
    """Dropped units are set to -lambda*alpha, then an affine map restores mean and variance."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = float(rate)
        keep = 1.0 - self.rate
        self.a = (keep + ALPHA_PRIME**2 * keep * (1.0 - keep)) ** -0.5
        self.b = -self.a * ALPHA_PRIME * (1.0 - keep)
        self._slope = None

    def forward(self, x, training=False, rng=None):
        if not training or self.rate == 0.0:
            if training:
                self._slope = 1.0
            return x
        if rng is None:
            raise StateError("AlphaDropout needs an Rng in training mode")
        keep = (rng.random(x.size).reshape(x.shape) < 1.0 - self.rate).astype(np.float64)
        self._slope = self.a * keep
        return self.a * (x * keep + ALPHA_PRIME * (1.0 - keep)) + self.b

    def backward(self, grad_out):
        return grad_out * self._take("_slope")


@dataclass
class LossValue:
    loss: float
    correct: int


def softmax_cross_entropy(logits: Matrix, labels) -> tuple[LossValue, Matrix]:
    """Mean categorical cross-entropy over the batch and its gradient w.r.t. ``logits``."""
    labels = np.asarray(labels, dtype=np.int64)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"{n} logit rows but labels of shape {labels.shape}")
    if n and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"labels must lie in [0, {c})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    rows = np.arange(n)
    loss = float(-log_p[rows, labels].mean())
    grad = np.exp(log_p)
    grad[rows, labels] -= 1.0
    grad /= n
    correct = int((logits.argmax(axis=1) == labels).sum())
    return LossValue(max(loss, 0.0), correct), grad


class Model:
    def __init__(self, layers: list[Layer]):
        self.layers = list(layers)
        self.training = False
        self.grads_ready = False

    def train(self):
        self.training = True
        return self

    def eval(self):
        self.training = False
        return self

    def forward(self, x: Matrix, rng: Rng | None = None) -> Matrix:
        for layer in self.layers:
            x = layer.forward(x, training=self.training, rng=rng)
        return x

    __call__ = forward

    def backward(self, grad: Matrix, input_grad: bool = True) -> Matrix | None:
        """Backpropagate ``grad`` (d loss / d output); ``input_grad=False`` skips the
        gradient w.r.t. the network input when the first layer is dense."""
        for i, layer in enumerate(reversed(self.layers)):
            if not input_grad and i == len(self.layers) - 1 and isinstance(layer, Dense):
                grad = layer.backward(grad, input_grad=False)
            else:
                grad = layer.backward(grad)
        self.grads_ready = True
        return grad

    def parameters(self) -> list[Param]:
        return [p for layer in self.layers for p in layer.params().values()]

    def zero_grad(self):
        for p in self.parameters():
            p.grad.fill(0.0)
        self.grads_ready = False

    def num_parameters(self) -> int:
        return sum(p.value.size for p in self.parameters())


def build_mnist_net(
    activation: ActivationKind,
    num_blocks: int = 12,
    rng: Rng | None = None,
    noise: str = "none",
    dropout_rate: float = 0.25,
    alpha_rate: float = 0.2,
    width: int = 500,
    n_in: int = 784,
    n_classes: int = 10,
) -> Model:
    """Dense(n_in, width) followed by ``num_blocks`` blocks of BN -> act -> dropout -> dense.

    The last block's dense layer maps to ``n_classes`` logits. ``noise`` selects
    the dropout flavour: ``"none"`` (inverted dropout everywhere),
    ``"gaussian"`` (Gaussian dropout everywhere) or ``"alpha"`` (the first
    dropout replaced by alpha dropout at ``alpha_rate``).
    """
    if num_blocks < 1:
        raise ValueError("num_blocks must be >= 1")
    if noise not in ("none", "gaussian", "alpha"):
        raise ValueError(f"unknown noise mode {noise!r}")
    rng = rng if rng is not None else Rng(0)
    layers: list[Layer] = [Dense(n_in, width, rng)]
    for i in range(num_blocks):
        if noise == "gaussian":
            drop: Layer = GaussianDropout(dropout_rate)
        elif noise == "alpha" and i == 0:
            drop = AlphaDropout(alpha_rate)
        else:
            drop = Dropout(dropout_rate)
        n_out = n_classes if i == num_blocks - 1 else width
        layers += [BatchNorm(width), Activation(activation), drop, Dense(width, n_out, rng)]
    return Model(layers)
