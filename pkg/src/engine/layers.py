"""Convolution layers bound to named entries of a ``ParamStore``."""

from typing import Optional

import numpy as np

from src.engine import ops
from src.engine.ops import ConvSpec
from src.engine.params import ParamStore
from src.engine.tensor import Tensor


class Conv1d:
    """``conv1d`` whose weight and bias live in a store under ``<prefix>.weight``/``<prefix>.bias``."""

    transposed = False

    def __init__(
        self,
        store: ParamStore,
        prefix: str,
        spec: ConvSpec,
        rng: Optional[np.random.Generator] = None,
        bias: bool = True,
    ):
        self.store = store
        self.prefix = prefix
        self.spec = spec
        self.has_bias = bias
        if rng is not None:
            self._register(rng)

    @property
    def weight_shape(self) -> tuple[int, int, int]:
        return (self.spec.out_channels, self.spec.in_channels, self.spec.kernel_size)

    def _register(self, rng: np.random.Generator) -> None:
        fan_in = self.spec.in_channels * self.spec.kernel_size
        self.store.init_uniform(f"{self.prefix}.weight", self.weight_shape, fan_in, rng)
        if self.has_bias:
            self.store.init_uniform(
                f"{self.prefix}.bias", (self.spec.out_channels,), fan_in, rng
            )

    @property
    def weight(self) -> Tensor:
        return self.store[f"{self.prefix}.weight"]

    @property
    def bias(self) -> Optional[Tensor]:
        return self.store[f"{self.prefix}.bias"] if self.has_bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv1d(x, self.spec, self.weight, self.bias)


class ConvTranspose1d(Conv1d):
    """``conv_transpose1d`` with ``in x out x kernel`` weights."""

    transposed = True

    @property
    def weight_shape(self) -> tuple[int, int, int]:
        return (self.spec.in_channels, self.spec.out_channels, self.spec.kernel_size)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv_transpose1d(x, self.spec, self.weight, self.bias)
