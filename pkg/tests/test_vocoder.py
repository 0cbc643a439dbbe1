"""Tests for the generator, discriminators, losses and the token embedder."""

import numpy as np
import pytest

from src.core.config import DiscriminatorConfig, GeneratorConfig
from src.core.errors import DataError, ShapeError
from src.engine.checkpoint import save_checkpoint
from src.engine.gradcheck import grad_check
from src.engine.params import ParamStore
from src.engine.tensor import Tensor
from src.features.audio import WaveBuffer
from src.features.mel import MelAnalyzer
from src.features.ssl import LayerStack
from src.quantizer.tokens import TokenStreams
from src.vocoder.discriminators import DiscriminatorSet
from src.vocoder.embedder import UnitEmbedder, embed_tokens
from src.vocoder.generator import Generator, generate
from src.vocoder.losses import (
    discriminator_adv_loss,
    feature_matching_loss,
    generator_adv_loss,
    loss_adv_and_fm,
    loss_mel,
)
from src.vocoder.models import ResynthesisModel, UnitVocoderModel

SMALL_GENERATOR = GeneratorConfig(
    base_channels=16,
    upsample_ratios=[8, 5, 4, 2],
    residual_block_kernel_sizes=[3],
    residual_block_dilations=[[1]],
)


def test_generator_output_length():
    """Test that 50 frames become 50 * 320 = 16000 samples in (-1, 1)."""
    generator = Generator(ParamStore(), 6, SMALL_GENERATOR, np.random.default_rng(0))

    wave = generate(Tensor(np.random.default_rng(1).standard_normal((6, 50))), generator, 16000)

    assert len(wave) == 16000
    assert wave.duration_s == 1.0
    assert np.all(np.abs(wave.samples) < 1.0)


@pytest.mark.parametrize("frames", range(1, 33))
def test_generator_length_law(frames):
    """Test output samples == frames * product(upsample_ratios) for any frame count."""
    config = GeneratorConfig(
        base_channels=8,
        upsample_ratios=[4, 2],
        residual_block_kernel_sizes=[3],
        residual_block_dilations=[[1]],
    )
    generator = Generator(ParamStore(), 3, config, np.random.default_rng(0))

    out = generator(Tensor(np.random.default_rng(frames).standard_normal((3, frames))))

    assert out.shape == (1, frames * 8)


def test_generator_rejects_width_mismatch():
    """Test the input width check."""
    generator = Generator(ParamStore(), 6, SMALL_GENERATOR, np.random.default_rng(0))

    with pytest.raises(ShapeError):
        generator(Tensor(np.zeros((5, 4))))


def test_loss_mel(make_sine):
    """Test zero loss for identical audio and a positive loss against silence."""
    analyzer = MelAnalyzer(1600, 32, n_fft=128, n_mels=8)
    tone = make_sine(200.0, seconds=0.5, sample_rate=1600)
    silence = WaveBuffer(np.zeros(len(tone)), 1600)

    assert loss_mel(analyzer, tone, tone).item() == pytest.approx(0.0, abs=1e-12)
    assert loss_mel(analyzer, tone, silence).item() > 1.0


def test_loss_mel_uses_common_length(make_sine):
    """Test that the longer waveform is cropped to the shorter one."""
    analyzer = MelAnalyzer(1600, 32, n_fft=128, n_mels=8)
    tone = make_sine(200.0, seconds=0.5, sample_rate=1600)
    longer = WaveBuffer(np.concatenate([tone.samples, np.ones(100)]), 1600)

    assert loss_mel(analyzer, tone, longer).item() == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DataError):
        loss_mel(analyzer, tone, np.zeros(10))


def test_least_squares_adversarial_losses():
    """Test the least-squares GAN terms on hand-picked scores."""
    ones = [Tensor(np.ones((1, 5)))]
    zeros = [Tensor(np.zeros((1, 5)))]

    assert generator_adv_loss(ones).item() == 0.0
    assert generator_adv_loss(zeros).item() == 1.0
    assert discriminator_adv_loss(ones, zeros).item() == 0.0
    assert discriminator_adv_loss(zeros, ones).item() == 2.0


def test_feature_matching_loss():
    """Test the mean absolute difference over maps."""
    real = [[Tensor(np.zeros((2, 3))), Tensor(np.zeros((1, 2)))]]
    fake = [[Tensor(np.ones((2, 3))), Tensor(np.full((1, 2), 3.0))]]

    assert feature_matching_loss(real, real).item() == 0.0
    assert feature_matching_loss(real, fake).item() == pytest.approx(2.0)


def test_discriminator_set():
    """Test one output per discriminator with gradients into the fake waveform."""
    config = DiscriminatorConfig(scale_factors=[1, 2], periods=[2, 3], channels=[4, 8], kernel_size=3)
    discs = DiscriminatorSet(ParamStore(np.float64), config, np.random.default_rng(0))
    rng = np.random.default_rng(1)
    fake = Tensor(rng.standard_normal((1, 101)) * 0.1, requires_grad=True)

    outputs = discs(fake)
    assert len(discs) == len(outputs) == 4
    for score, fmaps in outputs:
        assert len(fmaps) == 3
        assert fmaps[-1].shape == score.shape

    losses = loss_adv_and_fm(rng.standard_normal(101) * 0.1, fake, discs)
    assert losses.adv_d.item() >= 0.0
    (losses.adv_g + losses.fm).backward()
    assert fake.grad is not None and np.any(fake.grad != 0)


def _streams(lengths, ratios, ids=None):
    streams = ids or [np.zeros(n, dtype=np.int64) for n in lengths]
    ladder = [20.0 * r for r in ratios]
    return TokenStreams(ladder, streams, [f"h{i}" for i in range(len(streams))])


def test_embed_single_stream_is_table_lookup():
    """Test that one stream embeds to its table rows."""
    store = ParamStore(np.float64)
    embedder = UnitEmbedder(store, [3], embed_dim=2, rng=np.random.default_rng(0))
    table = store["embed.0.table"].data

    out = embed_tokens(_streams([4], [1], [np.array([2, 0, 1, 2])]), embedder)

    np.testing.assert_array_equal(out.data, table[[2, 0, 1, 2]].T)


def test_embed_repeats_coarse_streams_and_fuses():
    """Test repetition to the finest length and equal-weight fusion."""
    store = ParamStore(np.float64)
    embedder = UnitEmbedder(store, [2, 2], embed_dim=1, rng=np.random.default_rng(0))
    store["embed.0.table"].data = np.array([[0.0], [2.0]])
    store["embed.1.table"].data = np.array([[10.0], [20.0]])
    tokens = _streams([4, 2], [1, 2], [np.array([0, 1, 0, 1]), np.array([0, 1])])

    out = embedder(tokens)

    np.testing.assert_allclose(out.data, [[5.0, 6.0, 10.0, 11.0]])
    np.testing.assert_allclose(embedder.fusion_weights(), [0.5, 0.5])


def test_embed_frame_count():
    """Test that 200/100/50 token streams embed to 200 frames."""
    embedder = UnitEmbedder(ParamStore(), [4, 4, 4], embed_dim=8, rng=np.random.default_rng(0))

    out = embed_tokens(_streams([200, 100, 50], [1, 2, 4]), embedder)

    assert out.shape == (8, 200)


def test_embed_rejects_bad_ids_and_stream_count():
    """Test out-of-range ids and a stream count mismatch."""
    embedder = UnitEmbedder(ParamStore(), [3, 3], embed_dim=2, rng=np.random.default_rng(0))

    with pytest.raises(DataError, match="stream 1: token id 3 at position 1"):
        embed_tokens(_streams([2, 2], [1, 1], [np.array([0, 1]), np.array([0, 3])]), embedder)
    with pytest.raises(ShapeError):
        embed_tokens(_streams([2], [1]), embedder)


def test_unit_vocoder_warm_start(tiny_config, temp_dir):
    """Test that generator weights carry over from a resynthesis checkpoint."""
    resyn = ResynthesisModel(tiny_config, layers=3, input_dim=8, seed=1)
    path = save_checkpoint(temp_dir / "resyn.ckpt", resyn.store.state_dict(include_optimizer=True))

    unit = UnitVocoderModel(tiny_config, [4, 4, 4], seed=2)
    loaded = unit.warm_start(path)

    assert loaded and all(name.startswith("generator.") for name in loaded)
    assert set(loaded) == set(resyn.store.names("generator."))
    for name in loaded:
        np.testing.assert_array_equal(unit.store[name].data, resyn.store[name].data)
    assert unit.store.step == 0


def test_resynthesis_model_frame_geometry(tiny_config):
    """Test continuous resynthesis length on the tiny geometry."""
    model = ResynthesisModel(tiny_config, layers=3, input_dim=8, seed=0)
    stack = LayerStack(np.random.default_rng(0).standard_normal((3, 12, 8)), 20.0)

    wave = model.synthesize(stack)

    assert wave.shape == (1, 12 * tiny_config.hop_length)
    assert [level.frames for level in model.encode(stack).up_path] == [12, 6, 3]


def test_grad_check_generator():
    """Test generator gradients, input and every weight, against finite differences."""
    config = GeneratorConfig(
        base_channels=4,
        upsample_ratios=[2, 2],
        residual_block_kernel_sizes=[3],
        residual_block_dilations=[[1]],
    )
    store = ParamStore(np.float64)
    generator = Generator(store, 2, config, np.random.default_rng(0))
    generator_point = {name: t.data.copy() for name, t in store.items()}
    point = dict(generator_point, features=np.random.default_rng(1).standard_normal((2, 2)))

    def forward(t):
        store.use({name: t[name] for name in generator_point})
        return generator(t["features"])

    assert grad_check(forward, point) < 1e-5

