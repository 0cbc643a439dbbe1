"""Adversarial resynthesis training loop shared by both generator front ends."""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from src.core.config import RunConfig
from src.core.errors import DataError, NumericError
from src.core.logger import get_logger
from src.engine.checkpoint import save_checkpoint
from src.engine.params import ParamStore, adam_step
from src.engine.tensor import Tensor, no_grad
from src.features.audio import WaveBuffer
from src.features.mel import MelAnalyzer
from src.vocoder.discriminators import DiscriminatorSet
from src.vocoder.losses import (
    discriminator_adv_loss,
    feature_matching_loss,
    generator_adv_loss,
    loss_mel,
)

logger = get_logger(__name__)

LOSS_FIELDS = ("step", "l_mel", "l_fm", "l_adv_g", "l_adv_d")


@dataclass
class TrainingItem:
    """One training utterance: generator input and its reference waveform."""

    utt_id: str
    inputs: object
    wave: WaveBuffer


@dataclass
class LossRecord:
    step: int
    l_mel: float
    l_fm: float = 0.0
    l_adv_g: float = 0.0
    l_adv_d: float = 0.0

    def as_row(self) -> list:
        return [self.step, self.l_mel, self.l_fm, self.l_adv_g, self.l_adv_d]


@dataclass
class TrainingResult:
    """Loss trace and checkpoints of a training run."""

    losses: list[LossRecord] = field(default_factory=list)
    checkpoints: list[Path] = field(default_factory=list)
    latest: Optional[Path] = None
    trace_path: Optional[Path] = None

    def __str__(self) -> str:
        if not self.losses:
            return "No steps run"
        first, last = self.losses[0], self.losses[-1]
        return (
            f"{len(self.losses)} steps: L_mel {first.l_mel:.4f} -> {last.l_mel:.4f}, "
            f"{len(self.checkpoints)} checkpoints"
        )


def write_loss_trace(path: Path, losses: Sequence[LossRecord]) -> Path:
    """CSV with header ``step,l_mel,l_fm,l_adv_g,l_adv_d``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(LOSS_FIELDS)
        for record in losses:
            writer.writerow(record.as_row())
    return path


def read_loss_trace(path: Path) -> list[LossRecord]:
    with open(path, "r", newline="", encoding="utf-8") as f:
        return [
            LossRecord(
                step=int(row["step"]),
                l_mel=float(row["l_mel"]),
                l_fm=float(row["l_fm"]),
                l_adv_g=float(row["l_adv_g"]),
                l_adv_d=float(row["l_adv_d"]),
            )
            for row in csv.DictReader(f)
        ]


class ResynthesisTrainer:
    """Train a generator front end against scale and period discriminators.

    The generator objective is ``L_adv_g + lambda_fm * L_fm + lambda_mel * L_mel``; the
    discriminators minimize the least-squares real/fake objective. Adversarial terms
    switch on at ``training.discriminator_start_step``. Segments are drawn with a
    seeded generator, so runs are reproducible.

    Args:
        model: ``ResynthesisModel`` or ``UnitVocoderModel``
        config: Run configuration (training, optimizer, loss and discriminator sections)
        out_dir: Directory for checkpoints and the loss trace
        seed: Seed for discriminator init and segment sampling
    """

    def __init__(self, model, config: RunConfig, out_dir: Path, seed: Optional[int] = None):
        self.model = model
        self.config = config
        self.out_dir = Path(out_dir)
        self.seed = config.seed if seed is None else seed
        self.hop = config.hop_length
        self.analyzer = MelAnalyzer.from_config(config.audio, config.analysis)
        self.d_store = ParamStore(model.store.dtype)
        self.discs = DiscriminatorSet(
            self.d_store, config.discriminator, np.random.default_rng(self.seed + 1)
        )

    def _segment(self, item: TrainingItem, rng: np.random.Generator) -> tuple[object, Tensor]:
        align = self.model.alignment(item.inputs)
        frames_total = self.model.frames(item.inputs)
        seg = -(-self.config.training.segment_frames // align) * align
        if frames_total <= seg:
            start, frames = 0, frames_total
        else:
            start = align * int(rng.integers(0, (frames_total - seg) // align + 1))
            frames = seg
        inputs = self.model.crop(item.inputs, start, frames)
        samples = item.wave.samples[start * self.hop : (start + frames) * self.hop]
        if len(samples) < frames * self.hop:
            samples = np.pad(samples, (0, frames * self.hop - len(samples)))
        real = Tensor(samples.astype(self.model.store.dtype).reshape(1, -1))
        return inputs, real

    def _check(self, value: float, name: str, step: int) -> float:
        if not math.isfinite(value):
            raise NumericError(f"Non-finite {name} ({value}) at step {step}")
        return value

    def train(
        self,
        items: Sequence[TrainingItem],
        steps: Optional[int] = None,
        on_step: Optional[Callable[[LossRecord], None]] = None,
    ) -> TrainingResult:
        """Run the loop and write checkpoints plus ``losses.csv``.

        Raises:
            DataError: If there are no training items
            NumericError: If any loss becomes non-finite; the message names the step
        """
        if not items:
            raise DataError("training set is empty")
        training = self.config.training
        optim = self.config.optimizer
        lam = self.config.loss
        steps = training.steps if steps is None else steps
        batch = training.batch_size
        rng = np.random.default_rng(self.seed)
        g_store = self.model.store
        result = TrainingResult()

        for step in range(steps):
            adversarial = step >= training.discriminator_start_step
            picks = [items[int(rng.integers(len(items)))] for _ in range(batch)]
            segments = [self._segment(item, rng) for item in picks]
            fakes = [self.model.synthesize(inputs) for inputs, _ in segments]
            record = LossRecord(step=step, l_mel=0.0)

            if adversarial:
                self.d_store.zero_grad()
                for (_, real), fake in zip(segments, fakes):
                    real_scores = [score for score, _ in self.discs(real)]
                    fake_scores = [score for score, _ in self.discs(fake.detach())]
                    l_d = discriminator_adv_loss(real_scores, fake_scores)
                    record.l_adv_d += self._check(l_d.item(), "L_adv_d", step) / batch
                    (l_d * (1.0 / batch)).backward()
                d_lr = optim.learning_rate(self.d_store.step, discriminator=True)
                adam_step(self.d_store, self.d_store.grads(), d_lr, optim.betas, optim.eps)

            g_store.zero_grad()
            for (_, real), fake in zip(segments, fakes):
                l_mel = loss_mel(self.analyzer, real, fake)
                total = l_mel * lam.lambda_mel
                record.l_mel += self._check(l_mel.item(), "L_mel", step) / batch
                if adversarial:
                    with no_grad():
                        real_fmaps = [maps for _, maps in self.discs(real)]
                    fake_out = self.discs(fake)
                    l_adv_g = generator_adv_loss([score for score, _ in fake_out])
                    l_fm = feature_matching_loss(real_fmaps, [maps for _, maps in fake_out])
                    total = total + l_adv_g + l_fm * lam.lambda_fm
                    record.l_adv_g += self._check(l_adv_g.item(), "L_adv_g", step) / batch
                    record.l_fm += self._check(l_fm.item(), "L_fm", step) / batch
                self._check(total.item(), "generator loss", step)
                (total * (1.0 / batch)).backward()
            g_lr = optim.learning_rate(g_store.step)
            adam_step(g_store, g_store.grads(), g_lr, optim.betas, optim.eps)

            result.losses.append(record)
            if on_step is not None:
                on_step(record)
            if step % training.log_interval == 0 or step == steps - 1:
                logger.info(
                    f"step {step}: L_mel {record.l_mel:.4f} L_fm {record.l_fm:.4f} "
                    f"L_adv_g {record.l_adv_g:.4f} L_adv_d {record.l_adv_d:.4f}"
                )
            if (step + 1) % training.checkpoint_interval == 0:
                result.checkpoints.append(self.save(self.out_dir / f"checkpoint_{step + 1:08d}.ckpt"))

        result.latest = self.save(self.out_dir / "latest.ckpt")
        result.trace_path = write_loss_trace(self.out_dir / "losses.csv", result.losses)
        logger.info(f"Training finished: {result}")
        return result

    def save(self, path: Path) -> Path:
        """Generator-side parameters and moments, plus discriminators under ``disc.``."""
        entries = dict(self.model.store.state_dict(include_optimizer=True))
        for name, value in self.d_store.state_dict(include_optimizer=True).items():
            entries[f"disc.{name}"] = value
        return save_checkpoint(path, entries)
