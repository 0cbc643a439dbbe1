"""Token sources: resampler ladders and the layer baselines they are compared against."""

import re
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from src.core.errors import ConfigError
from src.engine.tensor import no_grad
from src.features.ssl import LayerStack
from src.resampler.ladder import ResolutionLadder

SourceKind = Literal["ladder", "layers", "sum"]

_LAYER = re.compile(r"^layer:(\d+)$")
_LAYERS = re.compile(r"^layers:(\d+(?:\+\d+)*)$")


@dataclass(frozen=True)
class TokenSource:
    """Where the continuous features behind each token stream come from.

    - ``ladder``: up-path levels of a trained resampler, one stream per resolution
    - ``layers``: raw front-end layers, one finest-resolution stream per layer
    - ``sum``: the uniform average of all front-end layers, one stream
    """

    kind: SourceKind
    ladder: Optional[ResolutionLadder] = None
    layers: tuple[int, ...] = ()

    @classmethod
    def from_ladder(cls, ladder: ResolutionLadder) -> "TokenSource":
        return cls("ladder", ladder=ladder)

    @classmethod
    def parse(cls, text: str) -> "TokenSource":
        """Parse ``layer:<i>``, ``layers:<i>+<j>+...``, ``sum`` or a ladder like ``20,40,80``.

        Raises:
            ConfigError: If the text matches none of these forms
        """
        text = text.strip()
        if text == "sum":
            return cls("sum")
        match = _LAYER.match(text) or _LAYERS.match(text)
        if match:
            return cls("layers", layers=tuple(int(i) for i in match.group(1).split("+")))
        try:
            return cls.from_ladder(ResolutionLadder.parse(text))
        except ValueError as e:
            raise ConfigError(f"Unknown token source {text!r}: {e}") from e

    @property
    def needs_resampler(self) -> bool:
        return self.kind == "ladder"

    @property
    def tag(self) -> str:
        """Directory-safe name, e.g. ``ladder-20-40-80``, ``layers-1+3`` or ``sum``."""
        if self.kind == "ladder":
            return "ladder-" + "-".join(f"{r:g}" for r in self.ladder.resolutions_ms)
        if self.kind == "sum":
            return "sum"
        return "layers-" + "+".join(str(i) for i in self.layers)

    def __str__(self) -> str:
        if self.kind == "ladder":
            return str(self.ladder)
        if self.kind == "sum":
            return "sum"
        prefix = "layer" if len(self.layers) == 1 else "layers"
        return f"{prefix}:" + "+".join(str(i) for i in self.layers)

    def resolutions_ms(self, frame_ms: float) -> list[float]:
        """One resolution per stream."""
        if self.kind == "ladder":
            return list(self.ladder.resolutions_ms)
        if self.kind == "sum":
            return [frame_ms]
        return [frame_ms] * len(self.layers)

    def validate_layers(self, available: int) -> None:
        for index in self.layers:
            if index >= available:
                raise ConfigError(
                    f"token source {self} uses layer {index}, but the front end has {available}"
                )

    def stream_features(self, stack: LayerStack, model=None) -> list[np.ndarray]:
        """Continuous ``D x T_i`` features per stream, finest first.

        Args:
            stack: Front-end layers of one utterance
            model: Trained ``ResynthesisModel``; required for ladder sources
        """
        if self.kind == "ladder":
            if model is None:
                raise ValueError("ladder sources need a trained resynthesis model")
            with no_grad():
                mrf = model.encode(stack)
            return [level.data.astype(np.float64) for level in mrf.up_path]
        if self.kind == "sum":
            return [stack.data.astype(np.float64).mean(axis=0).T]
        self.validate_layers(stack.layers)
        return [stack.layer(i).astype(np.float64) for i in self.layers]
