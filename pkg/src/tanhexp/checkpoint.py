"""Binary model checkpoints.

Layout, all little-endian::

    b"TXNN"  u32 version  u32 layer_count
    per layer:  u32 tag  u32 array_count
        per array:  u32 rows  u32 cols  f64[rows * cols]

Array 0 of every layer is a 1 x k row of layer settings (activation code and
beta, dropout rate, batchnorm epsilon/momentum, dense sizes); the remaining
arrays are parameters and batchnorm running statistics.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from tanhexp.activations import ActivationKind
from tanhexp.errors import FormatError, TruncatedFileError
from tanhexp.nn import (
    Activation,
    AlphaDropout,
    BatchNorm,
    Dense,
    Dropout,
    GaussianDropout,
    Layer,
    Model,
)

MAGIC = b"TXNN"
VERSION = 1

TAGS = {Dense: 1, BatchNorm: 2, Activation: 3, Dropout: 4, GaussianDropout: 5, AlphaDropout: 6}
_KIND_CODES = {"relu": 0, "swish": 1, "mish": 2, "tanhexp": 3}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def _layer_arrays(layer: Layer) -> list[np.ndarray]:
    if isinstance(layer, Dense):
        return [np.array([[layer.n_in, layer.n_out]], float), layer.W.value, layer.b.value]
    if isinstance(layer, BatchNorm):
        return [np.array([[layer.features, layer.epsilon, layer.momentum]]),
                layer.gamma.value, layer.beta.value, layer.running_mean, layer.running_var]
    if isinstance(layer, Activation):
        return [np.array([[_KIND_CODES[layer.kind.name], layer.kind.beta]])]
    return [np.array([[layer.rate]])]


def _build_layer(tag: int, arrays: list[np.ndarray]) -> Layer:
    cfg = arrays[0].reshape(-1)
    if tag == 1:
        layer = Dense(int(cfg[0]), int(cfg[1]))
        layer.W.value[...] = arrays[1]
        layer.b.value[...] = arrays[2]
        return layer
    if tag == 2:
        layer = BatchNorm(int(cfg[0]), float(cfg[1]), float(cfg[2]))
        layer.gamma.value[...] = arrays[1]
        layer.beta.value[...] = arrays[2]
        layer.running_mean = arrays[3].copy()
        layer.running_var = arrays[4].copy()
        return layer
    if tag == 3:
        return Activation(ActivationKind(_KIND_NAMES[int(cfg[0])], float(cfg[1])))
    if tag == 4:
        return Dropout(float(cfg[0]))
    if tag == 5:
        return GaussianDropout(float(cfg[0]))
    if tag == 6:
        return AlphaDropout(float(cfg[0]))
    raise FormatError(f"unknown layer tag {tag}")


def write_model(f: BinaryIO, model: Model) -> None:
    f.write(MAGIC + struct.pack("<II", VERSION, len(model.layers)))
    for layer in model.layers:
        arrays = _layer_arrays(layer)
        f.write(struct.pack("<II", TAGS[type(layer)], len(arrays)))
        for a in arrays:
            a = np.ascontiguousarray(a, dtype="<f8")
            f.write(struct.pack("<II", *a.shape))
            f.write(a.tobytes())


def _read(f: BinaryIO, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise TruncatedFileError(f"checkpoint truncated: wanted {n} bytes, got {len(data)}")
    return data


def read_model(f: BinaryIO) -> Model:
    magic = _read(f, 4)
    if magic != MAGIC:
        raise FormatError(f"bad checkpoint magic {magic!r}, expected {MAGIC!r}")
    version, count = struct.unpack("<II", _read(f, 8))
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    layers = []
    for _ in range(count):
        tag, n_arrays = struct.unpack("<II", _read(f, 8))
        arrays = []
        for _ in range(n_arrays):
            rows, cols = struct.unpack("<II", _read(f, 8))
            arrays.append(np.frombuffer(_read(f, 8 * rows * cols), dtype="<f8").reshape(rows, cols).astype(np.float64))
        layers.append(_build_layer(tag, arrays))
    return Model(layers)


def save(path, model: Model) -> None:
    with open(path, "wb") as f:
        write_model(f, model)


def load(path) -> Model:
    with open(path, "rb") as f:
        return read_model(f)
