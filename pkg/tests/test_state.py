"""Tests for state management."""

import json

import pytest

from src.core.errors import StaleArtifactError
from src.core.state import StateManager


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def test_state_manager_initialization(temp_dir):
    """Test state manager initialization."""
    manager = StateManager(temp_dir / "run")

    assert manager.state_file == temp_dir / "run" / "state.json"
    assert manager.state is not None
    assert len(manager.state.stages) == 0
    assert len(manager.state.features) == 0


def test_record_and_reload_stage(state_manager, temp_dir):
    """Test that a recorded stage survives a reload."""
    out = _write(temp_dir / "run" / "codebooks" / "20ms.somdcb", "centroids")
    inp = _write(temp_dir / "run" / "features" / "a.somdfeat", "features")

    state_manager.record_stage("fit-codebooks", [out], inputs=[inp], params={"k": 4})

    reloaded = StateManager(temp_dir / "run")
    record = reloaded.get_stage("fit-codebooks")
    assert record is not None
    assert list(record.outputs) == ["codebooks/20ms.somdcb"]
    assert list(record.inputs) == ["features/a.somdfeat"]
    assert record.params == {"k": 4}


def test_verify_stage_detects_changed_output(state_manager, temp_dir):
    """Test that editing an output after recording makes it stale."""
    out = _write(temp_dir / "run" / "tokens" / "a.json", "[1, 2]")
    state_manager.record_stage("tokenize", [out])

    state_manager.verify_stage("tokenize")

    out.write_text("[1, 3]")
    with pytest.raises(StaleArtifactError) as excinfo:
        state_manager.verify_stage("tokenize")
    assert excinfo.value.artifact == "tokens/a.json"
    assert excinfo.value.actual is not None


def test_verify_stage_detects_missing_output(state_manager, temp_dir):
    """Test that a deleted output is stale with no actual checksum."""
    out = _write(temp_dir / "run" / "tokens" / "a.json", "[1]")
    state_manager.record_stage("tokenize", [out])
    out.unlink()

    with pytest.raises(StaleArtifactError) as excinfo:
        state_manager.verify_stage("tokenize", paths=[out])
    assert excinfo.value.actual is None


def test_verify_stage_never_run(state_manager):
    """Test that verifying an unknown stage fails."""
    with pytest.raises(StaleArtifactError):
        state_manager.verify_stage("train-resyn")


def test_verify_stage_unrecorded_path(state_manager, temp_dir):
    """Test that asking about a path the stage never produced fails."""
    out = _write(temp_dir / "run" / "a.txt", "a")
    other = _write(temp_dir / "run" / "b.txt", "b")
    state_manager.record_stage("extract", [out])

    with pytest.raises(StaleArtifactError):
        state_manager.verify_stage("extract", paths=[other])


def test_check_inputs(state_manager, temp_dir):
    """Test that changed inputs only matter when asked for."""
    inp = _write(temp_dir / "run" / "features" / "a.somdfeat", "v1")
    out = _write(temp_dir / "run" / "codebooks" / "20ms.somdcb", "cb")
    state_manager.record_stage("fit-codebooks", [out], inputs=[inp])
    assert state_manager.is_stage_current("fit-codebooks")

    inp.write_text("v2")

    state_manager.verify_stage("fit-codebooks")
    with pytest.raises(StaleArtifactError):
        state_manager.verify_stage("fit-codebooks", check_inputs=True)
    assert not state_manager.is_stage_current("fit-codebooks")


def test_record_feature(state_manager, temp_dir):
    """Test feature records are persisted on save."""
    state_manager.record_feature("synth_0000", "wavsum", "dumpsum", frames=25)
    state_manager.save()

    reloaded = StateManager(temp_dir / "run")
    record = reloaded.get_feature("synth_0000")
    assert record.wav_checksum == "wavsum"
    assert record.dump_checksum == "dumpsum"
    assert record.frames == 25


def test_corrupted_state_is_backed_up(temp_dir):
    """Test that a corrupt state file is moved aside and replaced."""
    state_file = _write(temp_dir / "run" / "state.json", "{not json")

    manager = StateManager(temp_dir / "run")
    state = manager.load()

    assert len(state.stages) == 0
    assert (temp_dir / "run" / "state.json.corrupt").read_text() == "{not json"
    assert json.loads(state_file.read_text())["version"] == "1.0"


def test_relative_paths(state_manager, temp_dir):
    """Test that paths inside the run directory are stored relative to it."""
    assert state_manager.relative(temp_dir / "run" / "x" / "y.bin") == "x/y.bin"
    outside = temp_dir / "elsewhere.bin"
    assert state_manager.relative(outside) == str(outside.resolve())
