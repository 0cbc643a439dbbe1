"""Tests for manifests, split assignment and the synthetic corpus."""

import json

import numpy as np
import pytest

from src.core.errors import DataError
from src.core.manifest import Manifest, ManifestEntry, assign_splits, load_manifest, save_manifest
from src.data.synthetic import generate_synthetic_corpus
from src.features.audio import load_wave


def _write_lines(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


def test_assign_splits():
    """Test that leading entries go to valid, then test, then train."""
    assert assign_splits(6, 1, 2) == ["valid", "test", "test", "train", "train", "train"]
    assert assign_splits(2, 3, 3) == ["valid", "valid"]
    assert assign_splits(3, 0, 0) == ["train"] * 3


def test_load_manifest(temp_dir):
    """Test loading a manifest with a blank line and relative paths."""
    path = temp_dir / "manifest.jsonl"
    path.write_text(
        json.dumps({"utt_id": "a", "wav_path": "wavs/a.wav", "split": "test"})
        + "\n\n"
        + json.dumps({"utt_id": "b", "wav_path": "/abs/b.wav"})
        + "\n"
    )

    manifest = load_manifest(path)

    assert len(manifest) == 2
    assert manifest.get("b").split == "train"
    assert manifest.wav_path(manifest.get("a")) == temp_dir / "wavs" / "a.wav"
    assert str(manifest.wav_path(manifest.get("b"))) == "/abs/b.wav"
    assert [e.utt_id for e in manifest.split("test")] == ["a"]


def test_manifest_roundtrip(temp_dir):
    """Test save then load keeps entries in order."""
    manifest = Manifest(
        entries=[
            ManifestEntry(utt_id="x", wav_path="x.wav", split="valid"),
            ManifestEntry(utt_id="y", wav_path="y.wav"),
        ],
        root=temp_dir,
    )
    path = save_manifest(temp_dir / "m.jsonl", manifest)

    assert load_manifest(path).entries == manifest.entries


def test_manifest_missing(temp_dir):
    """Test that a missing manifest is a data error."""
    with pytest.raises(DataError, match="not found"):
        load_manifest(temp_dir / "nope.jsonl")


@pytest.mark.parametrize(
    "row",
    [
        {"utt_id": "a"},
        {"utt_id": "a", "wav_path": "a.wav", "split": "dev"},
        {"utt_id": "a/b", "wav_path": "a.wav"},
        {"utt_id": "a", "wav_path": "a.wav", "speaker": "s1"},
    ],
)
def test_manifest_bad_entry(temp_dir, row):
    """Test that malformed entries report their line number."""
    path = _write_lines(temp_dir / "m.jsonl", [{"utt_id": "ok", "wav_path": "ok.wav"}, row])

    with pytest.raises(DataError, match=":2:"):
        load_manifest(path)


def test_manifest_bad_json(temp_dir):
    """Test that a non-JSON line is a data error."""
    path = temp_dir / "m.jsonl"
    path.write_text("{not json}\n")

    with pytest.raises(DataError):
        load_manifest(path)


def test_manifest_duplicate_ids(temp_dir):
    """Test that duplicate utterance ids are rejected."""
    path = _write_lines(
        temp_dir / "m.jsonl",
        [{"utt_id": "a", "wav_path": "1.wav"}, {"utt_id": "a", "wav_path": "2.wav", "split": "test"}],
    )

    with pytest.raises(DataError, match="duplicate"):
        load_manifest(path)


def test_synthetic_corpus(tiny_corpus, tiny_config, temp_dir):
    """Test the generated corpus layout, splits and audio."""
    path, manifest = tiny_corpus

    assert path == temp_dir / "corpus" / "manifest.jsonl"
    assert len(manifest) == 6
    assert [e.split for e in manifest] == ["valid", "test", "test", "train", "train", "train"]

    wave = load_wave(manifest.wav_path(manifest.get("synth_0003")), tiny_config.audio.sample_rate)
    assert len(wave) == 800
    assert np.max(np.abs(wave.samples)) <= 1.0
    assert np.std(wave.samples) > 0.01


def test_synthetic_corpus_is_seeded(tiny_config, temp_dir):
    """Test that equal seeds reproduce clips and different seeds change them."""
    _, first = generate_synthetic_corpus(temp_dir / "a", tiny_config, seed=7)
    _, again = generate_synthetic_corpus(temp_dir / "b", tiny_config, seed=7)
    _, other = generate_synthetic_corpus(temp_dir / "c", tiny_config, seed=8)

    rate = tiny_config.audio.sample_rate
    a = load_wave(first.wav_path(first.get("synth_0000")), rate).samples
    b = load_wave(again.wav_path(again.get("synth_0000")), rate).samples
    c = load_wave(other.wav_path(other.get("synth_0000")), rate).samples

    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
