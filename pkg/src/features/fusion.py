"""Trainable softmax-weighted sum over front-end layers."""

from typing import Optional

import numpy as np

from src.core.errors import ShapeError
from src.engine import ops
from src.engine.params import ParamStore
from src.engine.tensor import Tensor
from src.features.ssl import LayerStack


class LayerWeights:
    """Fusion logits stored as ``<prefix>.logits``; effective weights are their softmax."""

    def __init__(self, store: ParamStore, layers: int, prefix: str = "fusion"):
        self.store = store
        self.layers = layers
        self.name = f"{prefix}.logits"
        if self.name not in store:
            store.add(self.name, np.zeros(layers))

    @property
    def logits(self) -> Tensor:
        return self.store[self.name]

    def weights(self) -> Tensor:
        return ops.softmax(self.logits)

    def effective(self) -> np.ndarray:
        """Current weights as a float64 array."""
        logits = self.logits.data.astype(np.float64)
        exp = np.exp(logits - logits.max())
        return exp / exp.sum()


def stacked_layers(stack: LayerStack, dtype=np.float32) -> Tensor:
    """``L x D x T`` constant tensor of a layer stack."""
    return Tensor(np.ascontiguousarray(stack.data.transpose(0, 2, 1), dtype=dtype))


def weighted_sum(
    stack: LayerStack,
    weights: LayerWeights,
    layers: Optional[Tensor] = None,
) -> Tensor:
    """``sum_i softmax(logits)_i * layer_i`` as a ``dims x frames`` sequence.

    Args:
        stack: Front-end layers of one utterance
        weights: Fusion logits, one per layer
        layers: Pre-built ``stacked_layers(stack)`` to reuse across calls

    Raises:
        ShapeError: If the logits length differs from the layer count
    """
    if weights.layers != stack.layers:
        raise ShapeError(
            f"{weights.layers} fusion weights for a stack of {stack.layers} layers"
        )
    if layers is None:
        layers = stacked_layers(stack, dtype=weights.logits.dtype)
    return ops.mix(weights.weights(), layers)


def top_layers(weights: np.ndarray, count: int) -> list[int]:
    """Indices of the ``count`` largest weights, ascending; ties favor the lower index."""
    order = np.argsort(-np.asarray(weights), kind="stable")
    return sorted(int(i) for i in order[:count])
