"""Log-mel analysis built on the engine's convolution.

The STFT is a strided ``conv1d`` with windowed cosine and sine kernels, so the same
code computes front-end features, the differentiable mel loss and MCD cepstra.
"""

from functools import lru_cache
from typing import Optional, Union

import librosa
import numpy as np
from scipy.signal import get_window

from src.core.config import AnalysisConfig, AudioConfig
from src.core.errors import DataError
from src.engine import ops
from src.engine.ops import ConvSpec
from src.engine.tensor import Tensor, no_grad

MAGNITUDE_EPS = 1e-9


class MelAnalyzer:
    """Centered STFT magnitude projected onto a mel filterbank, then log-compressed.

    Frames are ``len(samples) // hop_length``; the signal is reflect-padded by
    ``n_fft // 2`` on both sides so frame ``t`` is centered on sample ``t * hop``.
    """

    def __init__(
        self,
        sample_rate: int,
        hop_length: int,
        n_fft: int = 1024,
        n_mels: int = 80,
        fmin: float = 0.0,
        fmax: Optional[float] = None,
        log_floor: float = 1e-5,
    ):
        self.sample_rate = sample_rate
        self.hop_length = hop_length
        self.n_fft = n_fft
        self.n_mels = n_mels
        self.log_floor = log_floor
        self.n_freq = n_fft // 2 + 1

        window = get_window("hann", n_fft, fftbins=True)
        angle = 2.0 * np.pi * np.outer(np.arange(self.n_freq), np.arange(n_fft)) / n_fft
        kernels = np.concatenate([window * np.cos(angle), -window * np.sin(angle)])
        self._kernels = kernels[:, None, :]
        self._mel_basis = librosa.filters.mel(
            sr=sample_rate, n_fft=n_fft, n_mels=n_mels, fmin=fmin, fmax=fmax
        ).astype(np.float64)
        self.spec = ConvSpec(1, 2 * self.n_freq, n_fft, stride=hop_length)

    @classmethod
    def from_config(cls, audio: AudioConfig, analysis: AnalysisConfig) -> "MelAnalyzer":
        return _cached_analyzer(
            audio.sample_rate,
            audio.hop_length,
            analysis.n_fft,
            analysis.n_mels,
            analysis.fmin,
            analysis.fmax,
            analysis.log_floor,
        )

    def frames(self, num_samples: int) -> int:
        return num_samples // self.hop_length

    def log_mel(self, wave: Tensor) -> Tensor:
        """Differentiable log-mel of a ``1 x N`` waveform tensor, ``n_mels x N // hop``.

        Raises:
            DataError: If the waveform is shorter than one hop
        """
        num_samples = wave.frames
        n_frames = self.frames(num_samples)
        if n_frames < 1 or num_samples < 2:
            raise DataError(
                f"{num_samples} samples is shorter than one {self.hop_length}-sample frame"
            )
        dtype = wave.dtype
        pad = self.n_fft // 2
        index = np.pad(np.arange(num_samples), pad, mode="reflect")
        padded = wave[:, index]
        weight = Tensor(self._kernels.astype(dtype, copy=False))
        stft = ops.conv1d(padded, self.spec, weight)[:, :n_frames]
        real = stft[: self.n_freq]
        imag = stft[self.n_freq :]
        magnitude = ops.sqrt(ops.square(real) + ops.square(imag) + MAGNITUDE_EPS)
        mel = ops.matmul(Tensor(self._mel_basis.astype(dtype, copy=False)), magnitude)
        return ops.log(ops.clamp_min(mel, self.log_floor))

    def __call__(self, samples: Union[np.ndarray, Tensor]) -> np.ndarray:
        """Log-mel of raw samples as a ``n_mels x frames`` float64 array."""
        if isinstance(samples, Tensor):
            samples = samples.data
        with no_grad():
            wave = Tensor(np.asarray(samples, dtype=np.float64).reshape(1, -1))
            return self.log_mel(wave).data


@lru_cache(maxsize=8)
def _cached_analyzer(
    sample_rate: int,
    hop_length: int,
    n_fft: int,
    n_mels: int,
    fmin: float,
    fmax: Optional[float],
    log_floor: float,
) -> MelAnalyzer:
    return MelAnalyzer(sample_rate, hop_length, n_fft, n_mels, fmin, fmax, log_floor)
