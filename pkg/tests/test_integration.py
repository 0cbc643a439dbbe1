"""Integration tests for end-to-end workflows."""

import csv
from pathlib import Path

import pytest
import yaml
from typer.testing import CliRunner

from src.cli.main import app
from src.core.config import load_config
from src.core.pipeline import Pipeline
from src.core.state import StateManager
from src.data.synthetic import generate_synthetic_corpus
from src.quantizer.tokens import load_tokens
from src.vocoder.trainer import read_loss_trace
from tests.conftest import tiny_config_dict


runner = CliRunner()


@pytest.mark.slow
def test_cli_stage_by_stage(temp_dir):
    """Test every stage run from the command line, in order."""
    data = tiny_config_dict(temp_dir)
    data["training"]["steps"] = 4
    config_path = temp_dir / "config.yaml"
    config_path.write_text(yaml.safe_dump(data), encoding="utf-8")
    base = ["-q", "-c", str(config_path)]

    steps = [
        ["gen-synthetic-data", "--out", str(temp_dir / "corpus")],
        ["extract"],
        ["train-resyn"],
        ["fit-codebooks"],
        ["tokenize"],
        ["train-unit-vocoder"],
        ["resynth"],
        ["evaluate"],
    ]
    for step in steps:
        result = runner.invoke(app, base + step)
        assert result.exit_code == 0, f"{step[0]}: {result.stdout}"

    run = temp_dir / "run"
    tokens = load_tokens(run / "tokens" / "synth_0001.json")
    assert tokens.lengths == [25, 13, 7]

    with open(run / "eval" / "report.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [r["utt_id"] for r in rows] == ["synth_0001", "synth_0002", "mean"]
    assert float(rows[-1]["mcd"]) >= 0.0

    state = StateManager(run)
    for stage in ["extract", "train-resyn", "fit-codebooks", "tokenize", "train-unit-vocoder", "resynth"]:
        assert state.is_stage_current(stage), stage


@pytest.mark.slow
def test_cli_ablation(temp_dir):
    """Test the ablation command with a ladder and a layer baseline."""
    data = tiny_config_dict(temp_dir)
    config_path = temp_dir / "config.yaml"
    config_path.write_text(yaml.safe_dump(data), encoding="utf-8")
    base = ["-q", "-c", str(config_path)]

    assert runner.invoke(app, base + ["gen-synthetic-data", "--out", str(temp_dir / "corpus")]).exit_code == 0
    result = runner.invoke(app, base + ["ablate", "--ladder", "20,40", "--baseline", "layer:1"])
    assert result.exit_code == 0, result.stdout

    with open(temp_dir / "run" / "ablation" / "summary.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [r["source"] for r in rows] == ["(20,40)", "layer:1"]
    assert [r["status"] for r in rows] == ["ok", "ok"]
    assert float(rows[0]["tokens_per_second"]) == 75.0
    assert float(rows[1]["tokens_per_second"]) == 50.0


DESK_CONFIG = Path(__file__).resolve().parents[1] / "config" / "config.yaml"


@pytest.mark.slow
def test_desk_profile_overfits_small_corpus(temp_dir):
    """Test that the desk profile fits five 2 s clips and beats silence end to end."""
    config = load_config(
        str(DESK_CONFIG),
        {
            "synthetic.clips": 5,
            "synthetic.seconds": 2.0,
            "synthetic.valid_count": 0,
            "synthetic.test_count": 0,
            "training.steps": 2000,
            "metrics.require_separation": True,
            "paths.out_dir": str(temp_dir / "run"),
        },
    )
    _, manifest = generate_synthetic_corpus(temp_dir / "corpus", config)
    pipeline = Pipeline(config, manifest)

    assert pipeline.extract().errors == 0
    pipeline.train_resyn()
    losses = read_loss_trace(pipeline.layout.resyn_dir / "losses.csv")
    assert len(losses) == 2000
    assert losses[-1].l_mel <= 0.2 * losses[0].l_mel

    pipeline.fit_codebooks()
    pipeline.tokenize()
    pipeline.train_unit_vocoder()
    report = pipeline.end_to_end(split="train")

    assert report.items_processed == 5
    for metrics in report.evaluation.pairs:
        assert metrics.mcd < report.silence_mcd[metrics.utt_id], metrics.utt_id
