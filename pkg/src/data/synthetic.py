"""Seeded vocal-like clips: note sequences with vibrato, harmonic stacks and rests.

Every clip draws from its own generator seeded by ``(seed, index)``, so clip ``i`` is the
same no matter how many clips are requested.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from src.core.config import RunConfig, SyntheticConfig
from src.core.logger import get_logger
from src.core.manifest import Manifest, ManifestEntry, assign_splits, save_manifest
from src.features.audio import WaveBuffer, save_wave

logger = get_logger(__name__)

ATTACK_S = 0.02
RELEASE_S = 0.03
PEAK = 0.8


@dataclass
class NoteEvent:
    """One sung note: sample span and base pitch."""

    start: int
    end: int
    f0_hz: float


def plan_notes(rng: np.random.Generator, total: int, sample_rate: int, config: SyntheticConfig) -> list[NoteEvent]:
    """Split ``total`` samples into equal note slots, each ending in a rest.

    Pitches are whole semitones drawn uniformly within ``[f0_min, f0_max]``.
    """
    low = 12.0 * np.log2(config.f0_min / 440.0)
    high = 12.0 * np.log2(config.f0_max / 440.0)
    slot = total // config.notes_per_clip
    notes = []
    for i in range(config.notes_per_clip):
        start = i * slot
        end = total if i == config.notes_per_clip - 1 else start + slot
        voiced_end = start + int(round((end - start) * (1.0 - config.rest_fraction)))
        semitone = rng.integers(int(np.ceil(low)), int(np.floor(high)) + 1)
        notes.append(NoteEvent(start, voiced_end, float(440.0 * 2.0 ** (semitone / 12.0))))
    return notes


def _envelope(length: int, sample_rate: int) -> np.ndarray:
    env = np.ones(length)
    attack = min(length, int(ATTACK_S * sample_rate))
    release = min(length - attack, int(RELEASE_S * sample_rate))
    if attack:
        env[:attack] = np.linspace(0.0, 1.0, attack, endpoint=False)
    if release:
        env[length - release :] = np.linspace(1.0, 0.0, release)
    return env


def render_note(rng: np.random.Generator, note: NoteEvent, sample_rate: int, config: SyntheticConfig) -> np.ndarray:
    """Harmonic stack with sinusoidal vibrato; partials at or above Nyquist are dropped."""
    length = note.end - note.start
    if length <= 0:
        return np.zeros(0)
    t = np.arange(length) / sample_rate
    vibrato_phase = rng.uniform(0.0, 2.0 * np.pi)
    cents = config.vibrato_cents * np.sin(2.0 * np.pi * config.vibrato_hz * t + vibrato_phase)
    f0 = note.f0_hz * 2.0 ** (cents / 1200.0)
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate
    tilt = rng.uniform(0.6, 1.0)
    nyquist = sample_rate / 2.0
    out = np.zeros(length)
    for h in range(1, config.harmonics + 1):
        audible = h * f0 < nyquist
        if not np.any(audible):
            break
        out += np.where(audible, tilt ** (h - 1) / h * np.sin(h * phase), 0.0)
    return out * _envelope(length, sample_rate)


def synthesize_clip(rng: np.random.Generator, sample_rate: int, config: SyntheticConfig) -> WaveBuffer:
    """One clip of ``config.seconds`` at ``sample_rate``, peak ``PEAK`` plus background noise."""
    total = int(round(config.seconds * sample_rate))
    samples = np.zeros(total)
    for note in plan_notes(rng, total, sample_rate, config):
        samples[note.start : note.end] = render_note(rng, note, sample_rate, config)
    peak = np.max(np.abs(samples), initial=0.0)
    if peak > 0:
        samples *= PEAK / peak
    samples += rng.normal(0.0, 10.0 ** (config.noise_db / 20.0), size=total)
    return WaveBuffer(np.clip(samples, -1.0, 1.0), sample_rate)


def generate_synthetic_corpus(
    out_dir: Path,
    config: RunConfig,
    seed: Optional[int] = None,
) -> tuple[Path, Manifest]:
    """Write ``wavs/<utt_id>.wav`` and ``manifest.jsonl`` under ``out_dir``.

    Returns:
        Manifest path and the manifest
    """
    out_dir = Path(out_dir)
    seed = config.seed if seed is None else seed
    synthetic = config.synthetic
    rate = config.audio.sample_rate
    splits = assign_splits(synthetic.clips, synthetic.valid_count, synthetic.test_count)
    entries = []
    for index, split in enumerate(splits):
        utt_id = f"synth_{index:04d}"
        rng = np.random.default_rng([seed, index])
        save_wave(out_dir / "wavs" / f"{utt_id}.wav", synthesize_clip(rng, rate, synthetic))
        entries.append(ManifestEntry(utt_id=utt_id, wav_path=f"wavs/{utt_id}.wav", split=split))
    manifest = Manifest(entries=entries, root=out_dir)
    path = save_manifest(out_dir / "manifest.jsonl", manifest)
    logger.info(
        f"Wrote {len(entries)} synthetic clips to {out_dir} "
        f"({splits.count('train')} train, {splits.count('valid')} valid, {splits.count('test')} test)"
    )
    return path, manifest
