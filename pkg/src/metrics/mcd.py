"""Mel cepstral distortion between frame-synchronous waveforms."""

import math
from typing import Optional

import numpy as np
from scipy.fft import dct

from src.core.errors import DataError
from src.features.audio import WaveBuffer
from src.features.mel import MelAnalyzer

MCD_SCALE = 10.0 * math.sqrt(2.0) / math.log(10.0)


def mel_cepstrum(log_mel: np.ndarray, order: int = 13) -> np.ndarray:
    """Coefficients ``1..order`` of the orthonormal DCT-II of a ``n_mels x T`` log-mel.

    ``c0`` (overall level) is dropped.
    """
    return dct(log_mel, type=2, norm="ortho", axis=0)[1 : order + 1]


def mcd_from_cepstra(ref: np.ndarray, syn: np.ndarray) -> float:
    """Mean per-frame Euclidean cepstral distance in dB, over the common frames."""
    frames = min(ref.shape[1], syn.shape[1])
    if frames < 1:
        raise DataError("MCD needs at least one overlapping frame")
    diff = ref[:, :frames] - syn[:, :frames]
    return float(MCD_SCALE * np.mean(np.sqrt(np.sum(diff**2, axis=0))))


def mcd(
    ref: WaveBuffer,
    syn: WaveBuffer,
    analyzer: MelAnalyzer,
    order: int = 13,
) -> float:
    """MCD in dB between two waveforms cropped to their common length, without warping.

    Raises:
        DataError: If the overlap is shorter than one analysis frame
    """
    length = min(len(ref), len(syn))
    if analyzer.frames(length) < 1:
        raise DataError(
            f"Overlap of {length} samples is shorter than one analysis frame"
        )
    ref_c = mel_cepstrum(analyzer(ref.samples[:length]), order)
    syn_c = mel_cepstrum(analyzer(syn.samples[:length]), order)
    return mcd_from_cepstra(ref_c, syn_c)


def silence_like(wave: WaveBuffer, sample_rate: Optional[int] = None) -> WaveBuffer:
    """All-zero waveform of the same length, the separation floor for MCD checks."""
    return WaveBuffer(np.zeros(len(wave)), sample_rate or wave.sample_rate)
