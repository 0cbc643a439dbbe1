"""Mel, least-squares adversarial and feature-matching losses."""

from dataclasses import dataclass
from typing import Union

import numpy as np

from src.core.errors import DataError
from src.engine import ops
from src.engine.tensor import Tensor, no_grad
from src.features.audio import WaveBuffer
from src.features.mel import MelAnalyzer
from src.vocoder.discriminators import DiscOutput, DiscriminatorSet

Wave = Union[WaveBuffer, Tensor, np.ndarray]


def _as_wave_tensor(wave: Wave, dtype=None) -> Tensor:
    if isinstance(wave, Tensor):
        return wave
    samples = wave.samples if isinstance(wave, WaveBuffer) else np.asarray(wave)
    return Tensor(np.asarray(samples, dtype=dtype or np.float64).reshape(1, -1))


def loss_mel(analyzer: MelAnalyzer, real: Wave, fake: Wave) -> Tensor:
    """Mean absolute log-mel difference over the common length.

    Gradients flow into ``fake`` only.

    Raises:
        DataError: If the overlap is shorter than one analysis frame
    """
    fake_t = _as_wave_tensor(fake)
    real_t = _as_wave_tensor(real, dtype=fake_t.dtype)
    length = min(real_t.frames, fake_t.frames)
    if analyzer.frames(length) < 1:
        raise DataError(f"mel loss needs at least one frame of overlap, got {length} samples")
    with no_grad():
        real_mel = analyzer.log_mel(real_t[:, :length] if real_t.frames > length else real_t)
    fake_crop = fake_t[:, :length] if fake_t.frames > length else fake_t
    return ops.mean_abs_diff(analyzer.log_mel(fake_crop), real_mel.data)


def generator_adv_loss(fake_scores: list[Tensor]) -> Tensor:
    """Mean over discriminators of ``mean((D(fake) - 1)^2)``."""
    terms = [ops.mean_square(score - 1.0) for score in fake_scores]
    return _average(terms)


def discriminator_adv_loss(real_scores: list[Tensor], fake_scores: list[Tensor]) -> Tensor:
    """Mean over discriminators of ``mean((D(real) - 1)^2) + mean(D(fake)^2)``."""
    terms = [
        ops.mean_square(real - 1.0) + ops.mean_square(fake)
        for real, fake in zip(real_scores, fake_scores)
    ]
    return _average(terms)


def feature_matching_loss(real_fmaps: list[list[Tensor]], fake_fmaps: list[list[Tensor]]) -> Tensor:
    """Mean over all intermediate maps of ``mean|real - fake|``; real maps are constants."""
    terms = [
        ops.mean_abs_diff(fake, real.data)
        for real_maps, fake_maps in zip(real_fmaps, fake_fmaps)
        for real, fake in zip(real_maps, fake_maps)
    ]
    return _average(terms)


def _average(terms: list[Tensor]) -> Tensor:
    if not terms:
        return Tensor(np.zeros(()))
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total * (1.0 / len(terms))


@dataclass
class AdversarialLosses:
    adv_g: Tensor
    adv_d: Tensor
    fm: Tensor


def loss_adv_and_fm(real: Wave, fake: Wave, discs: DiscriminatorSet) -> AdversarialLosses:
    """Evaluate all three adversarial terms from one pass over both waveforms."""
    fake_t = _as_wave_tensor(fake)
    real_t = _as_wave_tensor(real, dtype=fake_t.dtype)
    real_out: list[DiscOutput] = discs(real_t)
    fake_out: list[DiscOutput] = discs(fake_t)
    real_scores = [score for score, _ in real_out]
    fake_scores = [score for score, _ in fake_out]
    return AdversarialLosses(
        adv_g=generator_adv_loss(fake_scores),
        adv_d=discriminator_adv_loss(real_scores, fake_scores),
        fm=feature_matching_loss([maps for _, maps in real_out], [maps for _, maps in fake_out]),
    )
