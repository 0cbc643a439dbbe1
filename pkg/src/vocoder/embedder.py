"""Token embedding front end of the unit vocoder."""

from typing import Optional

import numpy as np

from src.core.errors import DataError, ShapeError
from src.engine import ops
from src.engine.params import ParamStore
from src.engine.tensor import Tensor
from src.quantizer.tokens import TokenStreams


class UnitEmbedder:
    """One embedding table per stream plus softmax fusion logits.

    Parameters: ``embed.<i>.table`` (``k_i x embed_dim``) and ``embed.fusion.logits``.
    """

    def __init__(
        self,
        store: ParamStore,
        vocab_sizes: list[int],
        embed_dim: int = 512,
        rng: Optional[np.random.Generator] = None,
        prefix: str = "embed",
    ):
        if not vocab_sizes:
            raise ShapeError("unit embedder needs at least one stream")
        self.store = store
        self.vocab_sizes = list(vocab_sizes)
        self.embed_dim = embed_dim
        self.prefix = prefix
        if rng is not None:
            for i, k in enumerate(vocab_sizes):
                store.add(f"{prefix}.{i}.table", rng.standard_normal((k, embed_dim)))
            store.add(f"{prefix}.fusion.logits", np.zeros(len(vocab_sizes)))

    def table(self, stream: int) -> Tensor:
        return self.store[f"{self.prefix}.{stream}.table"]

    @property
    def fusion_logits(self) -> Tensor:
        return self.store[f"{self.prefix}.fusion.logits"]

    def fusion_weights(self) -> np.ndarray:
        logits = self.fusion_logits.data.astype(np.float64)
        exp = np.exp(logits - logits.max())
        return exp / exp.sum()

    def __call__(self, tokens: TokenStreams) -> Tensor:
        return embed_tokens(tokens, self)


def embed_tokens(tokens: TokenStreams, embedder: UnitEmbedder) -> Tensor:
    """Embed each stream, repeat coarser streams to the finest length and fuse them.

    Returns:
        ``embed_dim x T`` sequence where ``T`` is the finest stream length

    Raises:
        DataError: If an id is outside its table; the message names stream and position
        ShapeError: If the stream count differs from the embedder's
    """
    if len(tokens.streams) != len(embedder.vocab_sizes):
        raise ShapeError(
            f"{len(tokens.streams)} token streams for an embedder of {len(embedder.vocab_sizes)}"
        )
    frames = tokens.frames
    embedded = []
    for i, (ids, ratio, k) in enumerate(zip(tokens.streams, tokens.ratios, embedder.vocab_sizes)):
        bad = np.flatnonzero((ids < 0) | (ids >= k))
        if bad.size:
            raise DataError(
                f"stream {i}: token id {int(ids[bad[0]])} at position {int(bad[0])} "
                f"is outside [0, {k})"
            )
        if len(ids) == 0:
            raise DataError(f"stream {i} is empty")
        sequence = ops.embedding(embedder.table(i), ids)
        if ratio > 1 or len(ids) != frames:
            index = np.minimum(np.arange(frames) // ratio, len(ids) - 1)
            sequence = sequence[:, index]
        embedded.append(sequence)
    if len(embedded) == 1:
        return embedded[0]
    weights = ops.softmax(embedder.fusion_logits)
    return ops.mix(weights, ops.stack(embedded))
