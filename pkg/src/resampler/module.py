"""Transfer encoder and the multi-resolution resampling module.

The down path applies one strided convolution per ladder stage (kernel = stride =
stage ratio); the up path mirrors it with transposed convolutions and adds the
down-path feature of the same level as a weighted residual::

    x(i+1) = DOWN[i+1](pad(x(i)))
    xhat(t) = x(t)
    xhat(i-1) = w_res * (crop(UP(xhat(i))) + x(i-1))
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.core.errors import InvariantViolation, ShapeError
from src.engine.layers import Conv1d, ConvTranspose1d
from src.engine.ops import ConvSpec
from src.engine.params import ParamStore
from src.engine.tensor import Tensor
from src.resampler.ladder import ResolutionLadder, derive_ratios


@dataclass
class MultiResFeatures:
    """Per-level features of both paths, indexed by ladder level (0 = finest)."""

    ladder: ResolutionLadder
    down_path: list[Tensor] = field(default_factory=list)
    up_path: list[Tensor] = field(default_factory=list)

    def frame_counts(self) -> tuple[list[int], list[int]]:
        return [x.frames for x in self.down_path], [x.frames for x in self.up_path]


def pad_to_multiple(x: Tensor, multiple: int) -> Tensor:
    """Right-pad frames by repeating the last one until the count divides ``multiple``."""
    frames = x.frames
    missing = (-frames) % multiple
    if missing == 0:
        return x
    index = np.concatenate([np.arange(frames), np.full(missing, frames - 1)])
    return x[:, index]


def level_features(mrf: MultiResFeatures, resolution_ms: float) -> Tensor:
    """Up-path feature at ``resolution_ms``; these are what get discretized."""
    return mrf.up_path[mrf.ladder.index_of(resolution_ms)]


class Resampler:
    """Transfer encoder plus symmetric down/up stages with weighted residuals.

    Parameters live in ``store`` under ``transfer.*``, ``down.<i>.*`` and ``up.<i>.*``,
    where ``up.0`` is the stage leaving the coarsest level.
    """

    def __init__(
        self,
        store: ParamStore,
        input_dim: int,
        width: int,
        ladder: ResolutionLadder,
        w_res: float = math.sqrt(0.4),
        transfer_kernel: int = 7,
        rng: Optional[np.random.Generator] = None,
    ):
        if w_res <= 0:
            raise ValueError(f"w_res must be positive, got {w_res}")
        self.input_dim = input_dim
        self.width = width
        self.ladder = ladder
        self.w_res = w_res
        self.down_ratios, self.up_ratios = derive_ratios(ladder)

        self.transfer = Conv1d(
            store,
            "transfer",
            ConvSpec(input_dim, width, transfer_kernel, stride=1, padding=transfer_kernel // 2),
            rng,
        )
        self.down = [
            Conv1d(store, f"down.{i}", ConvSpec(width, width, r, stride=r), rng)
            for i, r in enumerate(self.down_ratios)
        ]
        self.up = [
            ConvTranspose1d(store, f"up.{i}", ConvSpec(width, width, r, stride=r), rng)
            for i, r in enumerate(self.up_ratios)
        ]

        stages = ladder.stages
        for i in range(stages):
            if self.down[i].spec.stride != self.up[stages - 1 - i].spec.stride:
                raise ShapeError(
                    f"down stage {i} ratio {self.down[i].spec.stride} does not mirror "
                    f"up stage {stages - 1 - i} ratio {self.up[stages - 1 - i].spec.stride}"
                )

    def transfer_encode(self, s: Tensor) -> Tensor:
        """Adapt fused features (``input_dim x T``) to ``x(0)`` (``width x T``)."""
        if s.channels != self.input_dim:
            raise ShapeError(
                f"transfer encoder expects {self.input_dim} input channels, got {s.channels}"
            )
        return self.transfer(s)

    def resample(self, x0: Tensor) -> MultiResFeatures:
        """Run the down path from ``x0`` and the residual up path back to the finest level."""
        mrf = MultiResFeatures(ladder=self.ladder)
        mrf.down_path.append(x0)
        x = x0
        for i, (stage, ratio) in enumerate(zip(self.down, self.down_ratios)):
            expected = -(-x.frames // ratio)
            x = stage(pad_to_multiple(x, ratio))
            if x.frames != expected:
                raise InvariantViolation(i + 1, f"down path has {x.frames} frames, expected {expected}")
            mrf.down_path.append(x)

        stages = self.ladder.stages
        up_path: list[Optional[Tensor]] = [None] * (stages + 1)
        xhat = mrf.down_path[stages]
        up_path[stages] = xhat
        for j, stage in enumerate(self.up):
            level = stages - 1 - j
            skip = mrf.down_path[level]
            upsampled = stage(xhat)
            if upsampled.frames < skip.frames:
                raise InvariantViolation(
                    level, f"up stage gave {upsampled.frames} frames, skip has {skip.frames}"
                )
            if upsampled.frames > skip.frames:
                upsampled = upsampled[:, : skip.frames]
            xhat = (upsampled + skip) * self.w_res
            up_path[level] = xhat
        mrf.up_path = up_path
        return mrf

    def __call__(self, s: Tensor) -> MultiResFeatures:
        return self.resample(self.transfer_encode(s))


def resample_forward(x0: Tensor, resampler: Resampler) -> MultiResFeatures:
    return resampler.resample(x0)
