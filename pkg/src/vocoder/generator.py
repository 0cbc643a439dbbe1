"""HiFi-GAN style waveform generator."""

from typing import Optional

import numpy as np

from src.core.config import GeneratorConfig
from src.core.errors import ShapeError
from src.engine import ops
from src.engine.layers import Conv1d, ConvTranspose1d
from src.engine.ops import ConvSpec
from src.engine.params import ParamStore
from src.engine.tensor import Tensor, no_grad
from src.features.audio import WaveBuffer

LRELU_SLOPE = 0.1
OUTPUT_SLOPE = 0.01


class ResBlock:
    """Dilated residual block: per dilation, two convs with a skip around them."""

    def __init__(
        self,
        store: ParamStore,
        prefix: str,
        channels: int,
        kernel_size: int,
        dilations: list[int],
        rng: Optional[np.random.Generator],
    ):
        self.convs1 = [
            Conv1d(
                store,
                f"{prefix}.convs1.{j}",
                ConvSpec(channels, channels, kernel_size, padding=d * (kernel_size - 1) // 2, dilation=d),
                rng,
            )
            for j, d in enumerate(dilations)
        ]
        self.convs2 = [
            Conv1d(
                store,
                f"{prefix}.convs2.{j}",
                ConvSpec(channels, channels, kernel_size, padding=(kernel_size - 1) // 2),
                rng,
            )
            for j in range(len(dilations))
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for c1, c2 in zip(self.convs1, self.convs2):
            xt = c1(ops.leaky_relu(x, LRELU_SLOPE))
            xt = c2(ops.leaky_relu(xt, LRELU_SLOPE))
            x = xt + x
        return x


class Generator:
    """Feature sequence (``input_dim x T``) to waveform (``1 x T * prod(upsample_ratios)``).

    Parameters live under ``<prefix>.*`` so a checkpoint trained on continuous
    features loads into the unit vocoder when the input widths agree.
    """

    def __init__(
        self,
        store: ParamStore,
        input_dim: int,
        config: GeneratorConfig,
        rng: Optional[np.random.Generator] = None,
        prefix: str = "generator",
    ):
        self.input_dim = input_dim
        self.config = config
        channels = config.base_channels
        self.conv_pre = Conv1d(
            store, f"{prefix}.conv_pre", ConvSpec(input_dim, channels, 7, padding=3), rng
        )

        self.ups: list[ConvTranspose1d] = []
        self.resblocks: list[list[ResBlock]] = []
        for i, ratio in enumerate(config.upsample_ratios):
            out_channels = max(channels // 2, 1)
            padding = (ratio + 1) // 2
            self.ups.append(
                ConvTranspose1d(
                    store,
                    f"{prefix}.ups.{i}",
                    ConvSpec(
                        channels,
                        out_channels,
                        2 * ratio,
                        stride=ratio,
                        padding=padding,
                        output_padding=2 * padding - ratio,
                    ),
                    rng,
                )
            )
            channels = out_channels
            self.resblocks.append(
                [
                    ResBlock(store, f"{prefix}.resblocks.{i}.{j}", channels, kernel, dilations, rng)
                    for j, (kernel, dilations) in enumerate(
                        zip(config.residual_block_kernel_sizes, config.residual_block_dilations)
                    )
                ]
            )
        self.conv_post = Conv1d(store, f"{prefix}.conv_post", ConvSpec(channels, 1, 7, padding=3), rng)

    @property
    def samples_per_frame(self) -> int:
        return self.config.samples_per_frame

    def __call__(self, features: Tensor) -> Tensor:
        """Synthesize a ``1 x N`` waveform in (-1, 1).

        Raises:
            ShapeError: If the feature width differs from ``input_dim``
        """
        if features.channels != self.input_dim:
            raise ShapeError(
                f"generator expects {self.input_dim} input channels, got {features.channels}"
            )
        x = self.conv_pre(features)
        for up, blocks in zip(self.ups, self.resblocks):
            x = up(ops.leaky_relu(x, LRELU_SLOPE))
            if blocks:
                total = blocks[0](x)
                for block in blocks[1:]:
                    total = total + block(x)
                x = total * (1.0 / len(blocks))
        x = self.conv_post(ops.leaky_relu(x, OUTPUT_SLOPE))
        return ops.tanh(x)


def generate(features: Tensor, generator: Generator, sample_rate: int) -> WaveBuffer:
    """Inference: synthesize without recording the graph."""
    with no_grad():
        wave = generator(features)
    return WaveBuffer(wave.data[0].astype(np.float64), sample_rate)
