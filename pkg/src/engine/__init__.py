"""Differentiable numerical core: tensors, convolutions, parameters and Adam."""

from src.engine.ops import ConvSpec, conv1d, conv_transpose1d, leaky_relu
from src.engine.params import ParamStore, adam_step
from src.engine.tensor import Tensor, no_grad

__all__ = [
    "ConvSpec",
    "ParamStore",
    "Tensor",
    "adam_step",
    "conv1d",
    "conv_transpose1d",
    "leaky_relu",
    "no_grad",
]
