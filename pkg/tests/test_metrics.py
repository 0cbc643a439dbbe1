"""Tests for the pitch tracker, F0 metrics, MCD and the evaluation report."""

import json
import math

import numpy as np
import pytest

from src.core.config import MetricsConfig
from src.core.errors import DataError
from src.features.audio import WaveBuffer, save_wave
from src.features.mel import MelAnalyzer
from src.metrics.f0 import F0Track, extract_f0, f0_metrics
from src.metrics.mcd import MCD_SCALE, mcd, mcd_from_cepstra, mel_cepstrum, silence_like
from src.metrics.report import EvalPair, evaluate_pair_set, load_eval_pairs, silence_floors


def _harmonic(f0, seconds=1.0, rate=16000, partials=5):
    t = np.arange(int(seconds * rate)) / rate
    samples = sum(np.sin(2 * np.pi * k * f0 * t) / k for k in range(1, partials + 1))
    return WaveBuffer(0.4 * samples / np.max(np.abs(samples)), rate)


def test_pure_tone_pitch(make_sine):
    """Test a 440 Hz sine is tracked within 2 Hz."""
    track = extract_f0(make_sine(440.0))

    assert track.frames == 100
    interior = slice(5, -5)
    assert np.all(track.voiced[interior])
    assert np.all(np.abs(track.f0_hz[interior] - 440.0) < 2.0)


def test_harmonic_tone_is_not_halved():
    """Test a harmonic-rich 220 Hz tone is reported at 220 Hz, not 110 Hz."""
    track = extract_f0(_harmonic(220.0))

    interior = slice(5, -5)
    assert np.all(track.voiced[interior])
    assert np.all(np.abs(track.f0_hz[interior] - 220.0) < 3.0)


def test_silence_is_unvoiced():
    """Test that digital silence has no voiced frames."""
    track = extract_f0(WaveBuffer(np.zeros(8000), 16000))

    assert track.frames == 50
    assert not track.voiced.any()
    assert np.all(track.f0_hz == 0.0)


def test_noise_is_mostly_unvoiced():
    """Test that white noise rarely passes the clarity threshold."""
    rng = np.random.default_rng(0)
    track = extract_f0(WaveBuffer(0.3 * rng.standard_normal(16000), 16000))

    assert track.voiced.mean() < 0.2


def test_estimates_clamped_to_range(make_sine):
    """Test that voiced estimates stay inside [f0_min, f0_max]."""
    config = MetricsConfig(f0_min=100.0, f0_max=300.0)
    track = extract_f0(make_sine(250.0), config)

    assert np.all(track.f0_hz[track.voiced] >= 100.0)
    assert np.all(track.f0_hz[track.voiced] <= 300.0)


def test_f0_track_validation():
    """Test that F0 and voicing flags must agree."""
    with pytest.raises(ValueError):
        F0Track(np.array([100.0, 0.0]), np.array([True, True]))


def test_one_semitone_sharp():
    """Test a constant one-semitone error: accuracy 0 and RMSE ln2 / 12."""
    ref = F0Track(np.full(20, 200.0), np.ones(20, dtype=bool))
    syn = F0Track(np.full(20, 200.0 * 2 ** (1 / 12)), np.ones(20, dtype=bool))

    result = f0_metrics(ref, syn)

    assert result.semitone_acc == 0.0
    assert result.f0_rmse == pytest.approx(math.log(2) / 12, rel=1e-9)
    assert result.f0_rmse == pytest.approx(0.0578, abs=1e-4)
    assert result.vuv_error == 0.0


def test_identical_tracks():
    """Test perfect agreement."""
    track = F0Track(np.array([0.0, 220.0, 230.0, 0.0]), np.array([False, True, True, False]))

    result = f0_metrics(track, track)

    assert result.f0_rmse == 0.0
    assert result.semitone_acc == 1.0
    assert result.vuv_error == 0.0


def test_no_common_voiced_frames():
    """Test that disjoint voicing gives no F0 error and full V/UV error."""
    voiced = F0Track(np.full(10, 300.0), np.ones(10, dtype=bool))
    unvoiced = F0Track(np.zeros(10), np.zeros(10, dtype=bool))

    result = f0_metrics(voiced, unvoiced)

    assert result.f0_rmse is None
    assert result.semitone_acc is None
    assert result.vuv_error == 1.0


def test_empty_tracks():
    """Test zero frames."""
    empty = F0Track(np.zeros(0), np.zeros(0, dtype=bool))

    assert f0_metrics(empty, empty).vuv_error == 0.0


def test_tracks_cropped_to_common_length():
    """Test that trailing frames of the longer track are ignored."""
    ref = F0Track(np.full(4, 100.0), np.ones(4, dtype=bool))
    syn = F0Track(np.concatenate([np.full(4, 100.0), np.zeros(6)]), np.arange(10) < 4)

    assert f0_metrics(ref, syn).vuv_error == 0.0


def test_mcd_identity(make_sine):
    """Test zero distortion for identical audio."""
    analyzer = MelAnalyzer(16000, 320, n_fft=1024, n_mels=80)
    tone = make_sine(330.0)

    assert mcd(tone, tone, analyzer) == pytest.approx(0.0, abs=1e-9)


def test_mcd_from_injected_cepstra():
    """Test the dB scaling on a unit offset in one coefficient."""
    ref = np.zeros((13, 7))
    syn = np.zeros((13, 9))
    syn[0] = 1.0

    assert mcd_from_cepstra(ref, syn) == pytest.approx(MCD_SCALE)
    assert MCD_SCALE == pytest.approx(6.1418, abs=1e-4)
    with pytest.raises(DataError):
        mcd_from_cepstra(ref, np.zeros((13, 0)))


def test_mel_cepstrum_drops_level():
    """Test that a constant log-mel offset only moves c0."""
    log_mel = np.random.default_rng(0).standard_normal((20, 5))

    np.testing.assert_allclose(mel_cepstrum(log_mel + 3.0, 13), mel_cepstrum(log_mel, 13), atol=1e-12)
    assert mel_cepstrum(log_mel, 13).shape == (13, 5)


def test_mcd_separates_near_and_far(make_sine):
    """Test that slight noise scores far below silence."""
    analyzer = MelAnalyzer(16000, 320, n_fft=1024, n_mels=80)
    tone = make_sine(330.0)
    rng = np.random.default_rng(1)
    noisy = WaveBuffer(tone.samples + 1e-3 * rng.standard_normal(len(tone)), 16000)

    near = mcd(tone, noisy, analyzer)
    far = mcd(tone, silence_like(tone), analyzer)

    assert 0.0 < near < far


def test_mcd_too_short():
    """Test that less than one frame of overlap is rejected."""
    analyzer = MelAnalyzer(16000, 320, n_fft=1024, n_mels=80)

    with pytest.raises(DataError):
        mcd(WaveBuffer(np.zeros(100), 16000), WaveBuffer(np.zeros(5000), 16000), analyzer)


def test_evaluate_pair_set(tiny_config, temp_dir, make_sine):
    """Test identity pairs, skipped pairs, order and the CSV report."""
    rate = tiny_config.audio.sample_rate
    first = save_wave(temp_dir / "a.wav", make_sine(200.0, seconds=0.5, sample_rate=rate))
    second = save_wave(temp_dir / "b.wav", make_sine(150.0, seconds=0.5, sample_rate=rate))
    pairs = [
        EvalPair("b", second, second),
        EvalPair("missing", first, temp_dir / "nope.wav"),
        EvalPair("a", first, first),
    ]

    report = evaluate_pair_set(pairs, tiny_config)

    assert [p.utt_id for p in report.pairs] == ["b", "a"]
    assert report.skipped == ["missing"]
    for pair in report.pairs:
        assert pair.mcd == pytest.approx(0.0, abs=1e-9)
        assert pair.f0_rmse == 0.0
        assert pair.semitone_acc == 1.0
        assert pair.vuv_error == 0.0

    path = report.write_csv(temp_dir / "report.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "utt_id,mcd,f0_rmse,semitone_acc,vuv_error"
    assert lines[-1].startswith("mean,")
    assert len(lines) == 4
    assert "Skipped: 1 (missing)" in report.table()


def test_silence_floors(tiny_config, temp_dir, make_sine):
    """Test that a tone is far from silence and that its floor matches a direct MCD."""
    rate = tiny_config.audio.sample_rate
    tone = make_sine(200.0, seconds=0.5, sample_rate=rate)
    path = save_wave(temp_dir / "a.wav", tone)

    floors = silence_floors([EvalPair("a", path, path)], tiny_config)

    analyzer = MelAnalyzer.from_config(tiny_config.audio, tiny_config.analysis)
    assert list(floors) == ["a"]
    assert floors["a"] > 1.0
    assert floors["a"] == pytest.approx(mcd(tone, silence_like(tone), analyzer), rel=1e-2)


def test_load_eval_pairs(temp_dir):
    """Test relative path resolution and malformed lines."""
    path = temp_dir / "pairs" / "pairs.jsonl"
    path.parent.mkdir()
    path.write_text(json.dumps({"utt_id": "u1", "ref_path": "ref/u1.wav", "syn_path": "/abs/u1.wav"}) + "\n")

    (pair,) = load_eval_pairs(path)

    assert pair.ref_path == temp_dir / "pairs" / "ref" / "u1.wav"
    assert str(pair.syn_path) == "/abs/u1.wav"

    path.write_text('{"utt_id": "u1"}\n')
    with pytest.raises(DataError, match=":1:"):
        load_eval_pairs(path)
    with pytest.raises(DataError, match="not found"):
        load_eval_pairs(temp_dir / "none.jsonl")
