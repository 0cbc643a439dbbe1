"""Scale and period discriminators over raw waveforms.

Each discriminator returns its final score map together with every intermediate
activation, which the feature-matching loss compares between real and fake audio.
"""

from typing import Optional

import numpy as np

from src.core.config import DiscriminatorConfig
from src.engine import ops
from src.engine.layers import Conv1d
from src.engine.ops import ConvSpec
from src.engine.params import ParamStore
from src.engine.tensor import Tensor

LRELU_SLOPE = 0.1

DiscOutput = tuple[Tensor, list[Tensor]]


class ConvStack:
    """Strided conv stack ending in a one-channel score conv."""

    def __init__(
        self,
        store: ParamStore,
        prefix: str,
        channels: list[int],
        kernel_size: int,
        stride: int,
        rng: Optional[np.random.Generator],
    ):
        self.convs = []
        in_channels = 1
        for i, out_channels in enumerate(channels):
            self.convs.append(
                Conv1d(
                    store,
                    f"{prefix}.convs.{i}",
                    ConvSpec(
                        in_channels,
                        out_channels,
                        kernel_size,
                        stride=1 if i == 0 else stride,
                        padding=kernel_size // 2,
                    ),
                    rng,
                )
            )
            in_channels = out_channels
        self.conv_post = Conv1d(
            store, f"{prefix}.conv_post", ConvSpec(in_channels, 1, 3, padding=1), rng
        )

    def __call__(self, x: Tensor) -> DiscOutput:
        fmaps = []
        for conv in self.convs:
            x = ops.leaky_relu(conv(x), LRELU_SLOPE)
            fmaps.append(x)
        score = self.conv_post(x)
        fmaps.append(score)
        return score, fmaps


class ScaleDiscriminator:
    """Conv stack over the waveform average-pooled ``log2(factor)`` times."""

    POOL = ConvSpec(1, 1, 4, stride=2, padding=2)

    def __init__(
        self,
        store: ParamStore,
        prefix: str,
        factor: int,
        config: DiscriminatorConfig,
        rng: Optional[np.random.Generator] = None,
    ):
        self.factor = factor
        self.pools = int(np.log2(factor))
        self.stack = ConvStack(store, prefix, config.channels, config.kernel_size, config.stride, rng)

    def __call__(self, wave: Tensor) -> DiscOutput:
        x = wave
        for _ in range(self.pools):
            pool = Tensor(np.full((1, 1, 4), 0.25, dtype=x.dtype))
            x = ops.conv1d(x, self.POOL, pool)
        return self.stack(x)


class PeriodDiscriminator:
    """Shared conv stack applied to each of the ``period`` interleaved phases of the waveform."""

    def __init__(
        self,
        store: ParamStore,
        prefix: str,
        period: int,
        config: DiscriminatorConfig,
        rng: Optional[np.random.Generator] = None,
    ):
        self.period = period
        self.stack = ConvStack(store, prefix, config.channels, config.kernel_size, config.stride, rng)

    def __call__(self, wave: Tensor) -> DiscOutput:
        samples = wave.frames
        missing = (-samples) % self.period
        if missing:
            index = np.pad(np.arange(samples), (0, missing), mode="reflect" if samples > 1 else "edge")
            wave = wave[:, index]
        phases = [self.stack(wave[:, q :: self.period]) for q in range(self.period)]
        score = ops.stack([p[0] for p in phases])
        fmaps = [ops.stack([p[1][i] for p in phases]) for i in range(len(phases[0][1]))]
        return score, fmaps


class DiscriminatorSet:
    """Both discriminator families; parameters under ``msd.<i>.*`` and ``mpd.<i>.*``."""

    def __init__(
        self,
        store: ParamStore,
        config: DiscriminatorConfig,
        rng: Optional[np.random.Generator] = None,
    ):
        self.store = store
        self.scale_discriminators = [
            ScaleDiscriminator(store, f"msd.{i}", factor, config, rng)
            for i, factor in enumerate(config.scale_factors)
        ]
        self.period_discriminators = [
            PeriodDiscriminator(store, f"mpd.{i}", period, config, rng)
            for i, period in enumerate(config.periods)
        ]

    def __len__(self) -> int:
        return len(self.scale_discriminators) + len(self.period_discriminators)

    def __call__(self, wave: Tensor) -> list[DiscOutput]:
        outputs = [d(wave) for d in self.scale_discriminators]
        outputs.extend(d(wave) for d in self.period_discriminators)
        return outputs
