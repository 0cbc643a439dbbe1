"""The two generator front ends: continuous multi-resolution features and discrete tokens."""

from pathlib import Path
from typing import Union

import numpy as np

from src.core.config import RunConfig
from src.engine.checkpoint import load_checkpoint
from src.engine.params import ParamStore
from src.engine.tensor import Tensor
from src.features.fusion import LayerWeights, weighted_sum
from src.features.ssl import LayerStack
from src.quantizer.tokens import TokenStreams
from src.resampler.module import MultiResFeatures, Resampler
from src.vocoder.embedder import UnitEmbedder
from src.vocoder.generator import Generator

ModelInput = Union[LayerStack, TokenStreams]


class ResynthesisModel:
    """Layer fusion, transfer encoder, resampler and generator trained jointly.

    The generator consumes the finest up-path feature; the front-end layers are
    inputs, not parameters.
    """

    mode = "continuous"

    def __init__(self, config: RunConfig, layers: int, input_dim: int, seed: int = 0, dtype=np.float32):
        rng = np.random.default_rng(seed)
        self.config = config
        self.store = ParamStore(dtype)
        self.fusion = LayerWeights(self.store, layers)
        self.resampler = Resampler(
            self.store,
            input_dim,
            config.resampler.width,
            config.resampler.resolution_ladder(),
            w_res=config.resampler.w_res,
            transfer_kernel=config.resampler.transfer_kernel,
            rng=rng,
        )
        self.generator = Generator(self.store, config.resampler.width, config.generator, rng)

    def encode(self, stack: LayerStack) -> MultiResFeatures:
        return self.resampler(weighted_sum(stack, self.fusion))

    def synthesize(self, stack: LayerStack) -> Tensor:
        return self.generator(self.encode(stack).up_path[0])

    @staticmethod
    def alignment(stack: LayerStack) -> int:
        return 1

    @staticmethod
    def frames(stack: LayerStack) -> int:
        return stack.frames

    @staticmethod
    def crop(stack: LayerStack, start: int, frames: int) -> LayerStack:
        return stack.crop(start, start + frames)


class UnitVocoderModel:
    """Token embedder in front of the same generator backbone."""

    mode = "tokens"

    def __init__(self, config: RunConfig, vocab_sizes: list[int], seed: int = 0, dtype=np.float32):
        rng = np.random.default_rng(seed)
        self.config = config
        self.store = ParamStore(dtype)
        self.embedder = UnitEmbedder(
            self.store, vocab_sizes, config.unit_vocoder.embed_dim, rng
        )
        self.generator = Generator(self.store, config.unit_vocoder.embed_dim, config.generator, rng)

    def synthesize(self, tokens: TokenStreams) -> Tensor:
        return self.generator(self.embedder(tokens))

    @staticmethod
    def alignment(tokens: TokenStreams) -> int:
        return max(tokens.ratios)

    @staticmethod
    def frames(tokens: TokenStreams) -> int:
        return tokens.frames

    @staticmethod
    def crop(tokens: TokenStreams, start: int, frames: int) -> TokenStreams:
        return tokens.crop(start, frames)

    def warm_start(self, checkpoint: Path) -> list[str]:
        """Copy ``generator.*`` weights from a resynthesis checkpoint."""
        entries = load_checkpoint(checkpoint)
        weights = {k: v for k, v in entries.items() if not k.startswith("optim.")}
        return self.store.load_state_dict(weights, prefix="generator.")


def load_model(model, checkpoint: Path) -> list[str]:
    """Load a trainer checkpoint into ``model`` (optimizer moments included)."""
    return model.store.load_state_dict(load_checkpoint(checkpoint))
