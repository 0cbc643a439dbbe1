"""Pytest configuration and shared fixtures."""

from pathlib import Path

import numpy as np
import pytest
import yaml

from src.core.config import RunConfig
from src.core.state import StateManager
from src.data.synthetic import generate_synthetic_corpus
from src.features.audio import WaveBuffer


def tiny_config_dict(temp_dir: Path) -> dict:
    """Geometry small enough to train every stage in seconds.

    1600 Hz audio with 20 ms frames gives a hop of 32 samples = 4 * 4 * 2.
    """
    return {
        "seed": 0,
        "audio": {"sample_rate": 1600, "frame_ms": 20},
        "analysis": {"n_fft": 128, "n_mels": 8},
        "ssl": {"source": "pseudo", "layers": 3},
        "resampler": {"ladder": [20, 40, 80], "width": 8, "transfer_kernel": 3},
        "generator": {
            "base_channels": 8,
            "upsample_ratios": [4, 4, 2],
            "residual_block_kernel_sizes": [3],
            "residual_block_dilations": [[1]],
        },
        "discriminator": {"scale_factors": [1], "periods": [2], "channels": [4], "kernel_size": 3},
        "unit_vocoder": {"embed_dim": 8, "warm_start": True},
        "training": {
            "steps": 2,
            "batch_size": 1,
            "segment_frames": 4,
            "checkpoint_interval": 1000,
            "log_interval": 1,
        },
        "quantizer": {"k": 4, "max_iters": 10},
        "metrics": {"f0_min": 50, "f0_max": 400},
        "synthetic": {
            "clips": 6,
            "seconds": 0.5,
            "f0_min": 100,
            "f0_max": 300,
            "notes_per_clip": 2,
            "harmonics": 3,
            "valid_count": 1,
            "test_count": 2,
        },
        "ablation": {"ladders": [[20], [20, 40]], "baselines": [], "train": True},
        "processing": {"max_workers": 2},
        "logging": {
            "level": "ERROR",  # Suppress logs during tests
            "file": str(temp_dir / "logs" / "singomd.log"),
            "error_file": str(temp_dir / "logs" / "errors.log"),
        },
        "paths": {
            "manifest": str(temp_dir / "corpus" / "manifest.jsonl"),
            "out_dir": str(temp_dir / "run"),
        },
    }


@pytest.fixture
def temp_dir(tmp_path):
    """Create a temporary directory for tests."""
    return tmp_path


@pytest.fixture
def tiny_config(temp_dir) -> RunConfig:
    """Create a tiny run configuration rooted in the temp directory."""
    return RunConfig(**tiny_config_dict(temp_dir))


@pytest.fixture
def config_file(temp_dir) -> Path:
    """Write the tiny configuration as YAML for CLI tests."""
    path = temp_dir / "config.yaml"
    path.write_text(yaml.safe_dump(tiny_config_dict(temp_dir)), encoding="utf-8")
    return path


@pytest.fixture
def tiny_corpus(tiny_config, temp_dir):
    """Generate the synthetic corpus the tiny config points at."""
    return generate_synthetic_corpus(temp_dir / "corpus", tiny_config)


@pytest.fixture
def state_manager(temp_dir):
    """Create a test state manager."""
    return StateManager(temp_dir / "run")


def sine_wave(freq: float, seconds: float = 1.0, sample_rate: int = 16000, amplitude: float = 0.5) -> WaveBuffer:
    t = np.arange(int(round(seconds * sample_rate))) / sample_rate
    return WaveBuffer(amplitude * np.sin(2.0 * np.pi * freq * t), sample_rate)


@pytest.fixture
def make_sine():
    """Factory for pure tones."""
    return sine_wave
