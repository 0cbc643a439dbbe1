"""Waveform buffers and WAV I/O."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import soundfile as sf

from src.core.errors import DataError
from src.core.logger import get_logger

logger = get_logger(__name__)


@dataclass
class WaveBuffer:
    """Mono samples in [-1, 1] at a sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise DataError(f"sample_rate must be positive, got {self.sample_rate}")
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.samples)):
            raise DataError("waveform contains non-finite samples")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate

    def normalized(self) -> "WaveBuffer":
        """Scale down to a peak of 1 when any sample exceeds it."""
        peak = float(np.max(np.abs(self.samples), initial=0.0))
        if peak <= 1.0:
            return self
        return WaveBuffer(self.samples / peak, self.sample_rate)

    def resampled(self, sample_rate: int) -> "WaveBuffer":
        """Linear-interpolation resample to ``sample_rate``."""
        if sample_rate == self.sample_rate or len(self) == 0:
            return WaveBuffer(self.samples, sample_rate)
        count = int(round(len(self) * sample_rate / self.sample_rate))
        source_t = np.arange(len(self)) / self.sample_rate
        target_t = np.arange(count) / sample_rate
        return WaveBuffer(np.interp(target_t, source_t, self.samples), sample_rate)

    def cropped(self, length: int) -> "WaveBuffer":
        return WaveBuffer(self.samples[:length], self.sample_rate)


def load_wave(path: Path, sample_rate: int) -> WaveBuffer:
    """Read a WAV file as mono at ``sample_rate``, peak-normalized to [-1, 1].

    Raises:
        DataError: If the file cannot be read
    """
    try:
        data, rate = sf.read(str(path), dtype="float64", always_2d=True)
    except (RuntimeError, OSError) as e:
        raise DataError(f"Cannot read audio {path}: {e}") from e
    wave = WaveBuffer(data.mean(axis=1), int(rate))
    if wave.sample_rate != sample_rate:
        logger.debug(f"Resampling {path} from {wave.sample_rate} Hz to {sample_rate} Hz")
        wave = wave.resampled(sample_rate)
    return wave.normalized()


def save_wave(path: Path, wave: WaveBuffer) -> Path:
    """Write 16-bit PCM mono WAV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), np.clip(wave.samples, -1.0, 1.0), wave.sample_rate, subtype="PCM_16")
    return path
