"""TanhExp activation and a small numpy network framework for MNIST-family experiments."""

from tanhexp.activations import MISH, RELU, SWISH, TANHEXP, ActivationKind
from tanhexp.core import Rng, matmul

__all__ = ["ActivationKind", "MISH", "RELU", "SWISH", "TANHEXP", "Rng", "matmul"]
__version__ = "0.1.0"
