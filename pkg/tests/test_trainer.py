"""Tests for the adversarial resynthesis training loop."""

import numpy as np
import pytest

from src.core.config import RunConfig
from src.core.errors import DataError, NumericError
from src.engine.checkpoint import load_checkpoint
from src.engine.params import decode_step
from src.features.audio import WaveBuffer
from src.features.ssl import LayerStack
from src.vocoder.models import ResynthesisModel, load_model
from src.vocoder import trainer as trainer_module
from src.vocoder.trainer import ResynthesisTrainer, TrainingItem, read_loss_trace

from tests.conftest import tiny_config_dict


def _config(temp_dir, **training) -> RunConfig:
    data = tiny_config_dict(temp_dir)
    optimizer = training.pop("optimizer", None)
    data["training"].update(training)
    if optimizer:
        data["optimizer"] = optimizer
    return RunConfig(**data)


def _item(config: RunConfig, frames: int, seed: int = 0) -> TrainingItem:
    """One clip of ``frames`` finest frames with matching audio."""
    rng = np.random.default_rng(seed)
    stack = LayerStack(rng.standard_normal((3, frames, 8)), config.audio.frame_ms)
    wave = WaveBuffer(0.3 * rng.standard_normal(frames * config.hop_length), config.audio.sample_rate)
    return TrainingItem("synth_0000", stack, wave)


def test_zero_learning_rate_gives_constant_trace(temp_dir):
    """Test that lr = 0 on one segment-length clip repeats the same losses."""
    config = _config(temp_dir, steps=3, optimizer={"lr": 0.0})
    model = ResynthesisModel(config, layers=3, input_dim=8, seed=0)
    trainer = ResynthesisTrainer(model, config, temp_dir / "train")

    result = trainer.train([_item(config, frames=config.training.segment_frames)])

    rows = [r.as_row()[1:] for r in result.losses]
    assert len(rows) == 3
    assert rows[1] == rows[0]
    assert rows[2] == rows[0]


def test_small_step_decreases_mel_loss(temp_dir):
    """Test that one small Adam step on the mel objective lowers it."""
    config = _config(
        temp_dir, steps=2, discriminator_start_step=1000, optimizer={"lr": 1e-5}
    )
    model = ResynthesisModel(config, layers=3, input_dim=8, seed=0, dtype=np.float64)
    trainer = ResynthesisTrainer(model, config, temp_dir / "train")

    result = trainer.train([_item(config, frames=config.training.segment_frames)])

    assert result.losses[0].l_adv_d == 0.0
    assert result.losses[1].l_mel < result.losses[0].l_mel


def test_checkpoints_and_loss_trace(temp_dir):
    """Test periodic checkpoints, the latest checkpoint and losses.csv."""
    config = _config(temp_dir, steps=2, checkpoint_interval=1)
    model = ResynthesisModel(config, layers=3, input_dim=8, seed=0)
    out_dir = temp_dir / "train"
    seen = []

    result = ResynthesisTrainer(model, config, out_dir).train(
        [_item(config, frames=10), _item(config, frames=7, seed=1)], on_step=seen.append
    )

    assert [p.name for p in result.checkpoints] == ["checkpoint_00000001.ckpt", "checkpoint_00000002.ckpt"]
    assert result.latest == out_dir / "latest.ckpt"
    assert [r.step for r in seen] == [0, 1]
    trace = read_loss_trace(result.trace_path)
    assert [r.step for r in trace] == [0, 1]
    assert trace[1].l_mel == pytest.approx(result.losses[1].l_mel)
    assert result.trace_path.read_text().splitlines()[0] == "step,l_mel,l_fm,l_adv_g,l_adv_d"

    entries = load_checkpoint(result.latest)
    assert any(name.startswith("disc.msd.0.") for name in entries)
    assert decode_step(entries["optim.step"]) == 2

    restored = ResynthesisModel(config, layers=3, input_dim=8, seed=5)
    load_model(restored, result.latest)
    for name in model.store:
        np.testing.assert_array_equal(restored.store[name].data, model.store[name].data)
    assert "2 steps" in str(result)


def test_non_finite_loss_names_the_step(temp_dir):
    """Test that a NaN parameter aborts training with the step in the message."""
    config = _config(temp_dir, steps=2)
    model = ResynthesisModel(config, layers=3, input_dim=8, seed=0)
    bias = model.store["generator.conv_post.bias"]
    bias.data = np.full_like(bias.data, np.nan)

    with pytest.raises(NumericError, match="at step 0"):
        ResynthesisTrainer(model, config, temp_dir / "train").train([_item(config, frames=8)])


def test_empty_training_set(temp_dir):
    """Test that training without items is a data error."""
    config = _config(temp_dir)
    model = ResynthesisModel(config, layers=3, input_dim=8, seed=0)

    with pytest.raises(DataError):
        ResynthesisTrainer(model, config, temp_dir / "train").train([])


def test_learning_rates_follow_schedule(temp_dir, monkeypatch):
    """Test per-network rates, exponential decay and the discriminator warm-up."""
    config = _config(
        temp_dir,
        steps=3,
        discriminator_start_step=1,
        optimizer={"lr": 1e-3, "discriminator_lr": 1e-4, "lr_decay": 0.5},
    )
    model = ResynthesisModel(config, layers=3, input_dim=8, seed=0)
    trainer = ResynthesisTrainer(model, config, temp_dir / "train")
    calls = []
    original = trainer_module.adam_step

    def recording_adam_step(store, grads, lr, *args, **kwargs):
        calls.append(("d" if store is trainer.d_store else "g", lr))
        return original(store, grads, lr, *args, **kwargs)

    monkeypatch.setattr(trainer_module, "adam_step", recording_adam_step)
    trainer.train([_item(config, frames=12)])

    assert [who for who, _ in calls] == ["g", "d", "g", "d", "g"]
    assert [lr for who, lr in calls if who == "g"] == pytest.approx([1e-3, 5e-4, 2.5e-4])
    assert [lr for who, lr in calls if who == "d"] == pytest.approx([1e-4, 5e-5])
