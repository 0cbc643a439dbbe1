"""Multi-layer frame features: the pseudo self-supervised front end."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import uniform_filter1d

from src.core.config import AnalysisConfig
from src.core.errors import DataError, ShapeError
from src.features.audio import WaveBuffer
from src.features.mel import MelAnalyzer


@dataclass
class LayerStack:
    """``layers x frames x dims`` features of one utterance at a fixed hop."""

    data: np.ndarray
    frame_ms: float

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ShapeError(f"layer stack must be 3-D (L x T x D), got rank {self.data.ndim}")
        if self.frame_ms <= 0:
            raise ShapeError(f"frame_ms must be positive, got {self.frame_ms}")

    @property
    def layers(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    @property
    def dims(self) -> int:
        return self.data.shape[2]

    def layer(self, index: int) -> np.ndarray:
        """One layer as a ``dims x frames`` sequence."""
        return np.ascontiguousarray(self.data[index].T)

    def crop(self, start: int, stop: int) -> "LayerStack":
        return LayerStack(self.data[:, start:stop], self.frame_ms)


def extract_pseudo_ssl(
    wave: WaveBuffer,
    layers: int,
    dims: int,
    frame_ms: float,
    analysis: Optional[AnalysisConfig] = None,
) -> LayerStack:
    """Deterministic stand-in for a frozen self-supervised model.

    Layer 0 is the log-mel spectrogram with ``dims`` bands at a hop of ``frame_ms``;
    layer ``i`` is layer ``i - 1`` smoothed over time by a centered moving average of
    ``2i + 1`` frames, so temporal context widens with depth.

    Raises:
        DataError: If the audio yields fewer than two frames
    """
    if layers < 1:
        raise ShapeError(f"layers must be >= 1, got {layers}")
    analysis = analysis or AnalysisConfig()
    hop = int(round(wave.sample_rate * frame_ms / 1000.0))
    if hop < 1 or len(wave) // hop < 2:
        raise DataError(
            f"audio of {len(wave)} samples is shorter than two {frame_ms:g} ms frames"
        )
    analyzer = MelAnalyzer(
        wave.sample_rate,
        hop,
        n_fft=analysis.n_fft,
        n_mels=dims,
        fmin=analysis.fmin,
        fmax=analysis.fmax,
        log_floor=analysis.log_floor,
    )
    current = analyzer(wave.samples).T
    stack = [current]
    for depth in range(1, layers):
        current = uniform_filter1d(current, size=2 * depth + 1, axis=0, mode="nearest")
        stack.append(current)
    return LayerStack(np.stack(stack), frame_ms)
