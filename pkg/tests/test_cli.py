"""Tests for CLI commands."""

import yaml
from typer.testing import CliRunner

from src.cli.main import app
from tests.conftest import tiny_config_dict


runner = CliRunner()


def test_cli_help():
    """Test CLI help command."""
    result = runner.invoke(app, ["--help"])

    assert result.exit_code == 0
    assert "SingOMD" in result.stdout
    for command in ["extract", "train-resyn", "fit-codebooks", "tokenize", "resynth", "evaluate", "ablate"]:
        assert command in result.stdout, command
    assert "status" in result.stdout
    assert "info" in result.stdout


def test_cli_version():
    """Test CLI version flag."""
    result = runner.invoke(app, ["--version"])

    assert result.exit_code == 0
    assert "SingOMD version 0.1.0" in result.stdout


def test_gen_synthetic_data(config_file, temp_dir):
    """Test corpus generation from the command line."""
    out = temp_dir / "cli_corpus"
    result = runner.invoke(app, ["-c", str(config_file), "gen-synthetic-data", "--out", str(out), "--clips", "3"])

    assert result.exit_code == 0, result.stdout
    assert (out / "manifest.jsonl").exists()
    assert len(list((out / "wavs").glob("*.wav"))) == 3


def test_extract_and_status(config_file, tiny_corpus, temp_dir):
    """Test extract on the tiny corpus, then the status table."""
    result = runner.invoke(app, ["-c", str(config_file), "extract"])

    assert result.exit_code == 0, result.stdout
    assert len(list((temp_dir / "run" / "features").glob("*.somdfeat"))) == 6

    status = runner.invoke(app, ["-c", str(config_file), "status"])
    assert status.exit_code == 0
    assert "extract" in status.stdout


def test_status_without_run(config_file):
    """Test status before any stage has run."""
    result = runner.invoke(app, ["-c", str(config_file), "status"])

    assert result.exit_code == 0
    assert "No completed stages" in result.stdout


def test_info(config_file):
    """Test the configuration panel."""
    result = runner.invoke(app, ["-c", str(config_file), "info"])

    assert result.exit_code == 0
    assert "87.5" in result.stdout


def test_ablate_without_sources(temp_dir, tiny_corpus):
    """Test that an empty comparison exits cleanly."""
    data = tiny_config_dict(temp_dir)
    data["ablation"] = {"ladders": [], "baselines": [], "train": False}
    path = temp_dir / "empty_ablation.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")

    result = runner.invoke(app, ["-c", str(path), "ablate"])

    assert result.exit_code == 0
    assert "No token sources" in result.stdout


def test_unknown_config_key_exits_1(temp_dir):
    """Test that a config error exits with code 1."""
    data = tiny_config_dict(temp_dir)
    data["not_a_section"] = {}
    path = temp_dir / "bad.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")

    result = runner.invoke(app, ["-c", str(path), "info"])

    assert result.exit_code == 1


def test_missing_explicit_config_exits_1(temp_dir):
    """Test that a named config file must exist."""
    result = runner.invoke(app, ["-c", str(temp_dir / "nope.yaml"), "info"])

    assert result.exit_code == 1
    assert "not found" in result.stdout


def test_missing_manifest_exits_2(config_file):
    """Test that a data error exits with code 2."""
    result = runner.invoke(app, ["-c", str(config_file), "extract"])

    assert result.exit_code == 2
    assert "Manifest not found" in result.stdout


def test_invalid_ladder_exits_1(config_file, tiny_corpus):
    """Test that a malformed --ladder is a config error."""
    result = runner.invoke(app, ["-c", str(config_file), "ablate", "--ladder", "20,30"])

    assert result.exit_code == 1


def test_invalid_split_exits_1(config_file, tiny_corpus):
    """Test that tokenize rejects unknown splits."""
    result = runner.invoke(app, ["-c", str(config_file), "tokenize", "--split", "dev"])

    assert result.exit_code == 1
    assert "Unknown split" in result.stdout
