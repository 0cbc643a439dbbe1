"""Normalized cross-correlation pitch tracker and F0 comparison metrics."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.core.config import MetricsConfig
from src.features.audio import WaveBuffer

# A shorter-lag local peak within this share of the global peak wins (octave guard).
OCTAVE_GUARD = 0.9


@dataclass
class F0Track:
    """Per-frame F0 in Hz, 0 where unvoiced."""

    f0_hz: np.ndarray
    voiced: np.ndarray
    frame_ms: float = 10.0

    def __post_init__(self):
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64)
        self.voiced = np.asarray(self.voiced, dtype=bool)
        if self.f0_hz.shape != self.voiced.shape:
            raise ValueError("f0_hz and voiced must have one entry per frame")
        if np.any((self.f0_hz > 0) != self.voiced):
            raise ValueError("f0_hz must be positive exactly on voiced frames")

    @property
    def frames(self) -> int:
        return self.f0_hz.shape[0]

    def cropped(self, frames: int) -> "F0Track":
        return F0Track(self.f0_hz[:frames], self.voiced[:frames], self.frame_ms)


def _pick_lag(nccf: np.ndarray, min_lag: int, max_lag: int) -> Optional[int]:
    """Shortest interior local maximum within ``OCTAVE_GUARD`` of the global peak."""
    lags = np.arange(min_lag + 1, max_lag)
    if lags.size == 0:
        return None
    values = nccf[lags]
    peaks = lags[(values >= nccf[lags - 1]) & (values >= nccf[lags + 1])]
    if peaks.size == 0:
        return None
    best = nccf[peaks].max()
    if best <= 0:
        return None
    return int(peaks[np.argmax(nccf[peaks] >= OCTAVE_GUARD * best)])


def extract_f0(wave: WaveBuffer, config: Optional[MetricsConfig] = None) -> F0Track:
    """Track F0 with a normalized cross-correlation peak search per frame.

    Frame ``t`` is centered on sample ``t * hop`` (the signal is zero-padded); there are
    ``len(wave) // hop`` frames. A frame is voiced when its peak clarity exceeds
    ``clarity_threshold`` and its energy exceeds ``silence_db`` dBFS. Voiced estimates are
    refined by parabolic interpolation and clamped to ``[f0_min, f0_max]``.
    """
    config = config or MetricsConfig()
    rate = wave.sample_rate
    hop = max(1, int(round(rate * config.frame_ms / 1000.0)))
    win = max(2, int(round(rate * config.window_ms / 1000.0)))
    min_lag = max(1, int(math.floor(rate / config.f0_max)))
    max_lag = max(min_lag + 2, int(math.ceil(rate / config.f0_min)))
    n_frames = len(wave) // hop

    f0 = np.zeros(n_frames)
    voiced = np.zeros(n_frames, dtype=bool)
    if n_frames == 0:
        return F0Track(f0, voiced, config.frame_ms)

    half = win // 2
    padded = np.pad(wave.samples, (half, win + max_lag + 1))
    floor = 10.0 ** (config.silence_db / 10.0)
    for t in range(n_frames):
        segment = padded[t * hop : t * hop + win + max_lag + 1]
        frame = segment[:win]
        energy = float(np.dot(frame, frame))
        if energy / win <= floor:
            continue
        shifted = sliding_window_view(segment, win)[: max_lag + 2]
        cross = shifted @ frame
        shifted_energy = np.einsum("lw,lw->l", shifted, shifted)
        denom = np.sqrt(energy * shifted_energy)
        nccf = np.divide(cross, denom, out=np.zeros_like(cross), where=denom > 0)
        lag = _pick_lag(nccf, min_lag, max_lag)
        if lag is None or nccf[lag] <= config.clarity_threshold:
            continue
        left, center, right = nccf[lag - 1], nccf[lag], nccf[lag + 1]
        curvature = left - 2.0 * center + right
        offset = 0.5 * (left - right) / curvature if curvature < 0 else 0.0
        f0[t] = float(np.clip(rate / (lag + offset), config.f0_min, config.f0_max))
        voiced[t] = True
    return F0Track(f0, voiced, config.frame_ms)


@dataclass
class F0Metrics:
    """F0 RMSE and semitone accuracy are None when no frame is voiced in both tracks."""

    f0_rmse: Optional[float]
    semitone_acc: Optional[float]
    vuv_error: float


def f0_metrics(ref: F0Track, syn: F0Track) -> F0Metrics:
    """Log-F0 RMSE and semitone accuracy over both-voiced frames, and V/UV disagreement."""
    frames = min(ref.frames, syn.frames)
    ref, syn = ref.cropped(frames), syn.cropped(frames)
    vuv_error = float(np.mean(ref.voiced != syn.voiced)) if frames else 0.0
    both = ref.voiced & syn.voiced
    if not np.any(both):
        return F0Metrics(None, None, vuv_error)
    log_ratio = np.log(syn.f0_hz[both]) - np.log(ref.f0_hz[both])
    f0_rmse = float(np.sqrt(np.mean(log_ratio**2)))
    semitones = np.round(12.0 * log_ratio / np.log(2.0))
    semitone_acc = float(np.mean(semitones == 0))
    return F0Metrics(f0_rmse, semitone_acc, vuv_error)
