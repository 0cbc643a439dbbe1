"""Tests for stage orchestration, staleness checks and the token-source ablation."""

import numpy as np
import pytest

from src.core import ablation
from src.core import pipeline as pipeline_module
from src.core.ablation import run_ablation
from src.core.errors import ConfigError, NumericError, ShapeError, StaleArtifactError
from src.core.pipeline import STAGES, Pipeline
from src.core.sources import TokenSource
from src.core.state import StateManager
from src.features.audio import WaveBuffer, save_wave
from src.quantizer.tokens import load_tokens


@pytest.fixture
def pipeline(tiny_config, tiny_corpus):
    """Pipeline over the tiny synthetic corpus."""
    _, manifest = tiny_corpus
    return Pipeline(tiny_config, manifest)


@pytest.fixture
def trained(pipeline):
    """Pipeline with every stage run once."""
    pipeline.run_all()
    return pipeline


def test_extract_is_incremental(pipeline, tiny_config, tiny_corpus):
    """Test that unchanged inputs are skipped and edited ones re-extracted."""
    first = pipeline.extract()
    assert first.items_processed == 6
    assert first.errors == 0
    assert (pipeline.features_dir / "synth_0000.somdfeat").exists()

    _, manifest = tiny_corpus
    again = Pipeline(tiny_config, manifest).extract()
    assert again.items_processed == 0
    assert again.items_skipped == 6

    rate = tiny_config.audio.sample_rate
    save_wave(manifest.wav_path(manifest.get("synth_0004")), WaveBuffer(0.1 * np.ones(800), rate))
    edited = Pipeline(tiny_config, manifest).extract()
    assert edited.items_processed == 1
    assert edited.items_skipped == 5


def test_extract_reruns_when_dump_is_damaged(pipeline, tiny_config, tiny_corpus):
    """Test that a modified dump is rewritten even when the WAV is unchanged."""
    pipeline.extract()
    dump = pipeline.features_dir / "synth_0001.somdfeat"
    dump.write_bytes(dump.read_bytes()[:-4])

    _, manifest = tiny_corpus
    report = Pipeline(tiny_config, manifest).extract()

    assert report.items_processed == 1


def test_extract_reports_unreadable_audio(pipeline, tiny_corpus):
    """Test that a broken WAV is an error row, not a crash."""
    _, manifest = tiny_corpus
    manifest.wav_path(manifest.get("synth_0002")).write_bytes(b"garbage")

    report = pipeline.extract()

    assert report.errors == 1
    assert "synth_0002" in report.error_details[0]
    assert report.items_processed == 5


def test_run_all_produces_every_artifact(trained, tiny_config):
    """Test stage order and the artifacts of a full run."""
    layout = trained.layout
    assert [r.stage for r in trained.run_all(skip_current=True)] == ["extract", "evaluate"]

    for stage in STAGES:
        assert trained.state.get_stage(stage) is not None, stage
    assert sorted(p.name for p in layout.codebooks_dir.iterdir()) == [
        "stream_0_20ms.somdcb",
        "stream_1_40ms.somdcb",
        "stream_2_80ms.somdcb",
    ]
    assert len(list(layout.tokens_dir.glob("*.json"))) == 6
    assert sorted(p.name for p in layout.resynth_dir.glob("*.wav")) == ["synth_0001.wav", "synth_0002.wav"]
    assert (layout.eval_dir / "report.csv").exists()
    assert (trained.out_dir / "resolved_config.yaml").exists()

    tokens = load_tokens(trained.token_path("synth_0003"))
    assert tokens.lengths == [25, 13, 7]
    assert tokens.tokens_per_second() == 87.5
    assert max(int(s.max()) for s in tokens.streams) < tiny_config.quantizer.k

    unit = trained.state.get_stage("train-unit-vocoder")
    assert unit.params["warm_start"] is True
    assert unit.params["vocab_sizes"] == [4, 4, 4]


def test_tokenize_is_deterministic(trained):
    """Test that re-tokenizing gives byte-identical files."""
    before = trained.token_path("synth_0005").read_bytes()

    trained.tokenize()

    assert trained.token_path("synth_0005").read_bytes() == before


def test_changed_features_make_training_stale(pipeline, tiny_config, tiny_corpus):
    """Test that editing a feature dump after training blocks downstream stages."""
    pipeline.extract()
    pipeline.train_resyn(steps=1)
    dump = pipeline.features_dir / "synth_0003.somdfeat"
    raw = bytearray(dump.read_bytes())
    raw[-1] ^= 0x01
    dump.write_bytes(bytes(raw))

    _, manifest = tiny_corpus
    with pytest.raises(StaleArtifactError):
        Pipeline(tiny_config, manifest).fit_codebooks()


def test_resynth_requires_unit_vocoder(pipeline):
    """Test that a missing upstream stage is reported as stale."""
    pipeline.extract()
    with pytest.raises(StaleArtifactError):
        pipeline.resynth()


def test_baseline_cannot_train_resampler(pipeline):
    """Test that layer baselines have nothing to train."""
    baseline = pipeline.scoped(TokenSource.parse("sum"))

    with pytest.raises(ConfigError):
        baseline.train_resyn()


def test_ladder_must_start_at_frame(tiny_config, tiny_corpus):
    """Test that a ladder not starting at frame_ms is rejected."""
    _, manifest = tiny_corpus

    with pytest.raises(ConfigError):
        Pipeline(tiny_config, manifest, source=TokenSource.parse("40,80"))


def test_end_to_end(trained):
    """Test the single-pass path from features to evaluated audio."""
    report = trained.end_to_end()

    out = trained.layout.end_to_end_dir
    assert report.items_processed == 2
    assert sorted(p.name for p in (out / "wavs").glob("*.wav")) == ["synth_0001.wav", "synth_0002.wav"]
    assert (out / "report.csv").exists()
    assert len(report.evaluation.pairs) == 2
    assert trained.state.get_stage("end-to-end") is not None


def test_ablation_rows(pipeline):
    """Test token-rate arithmetic, baselines and absent rows."""
    sources = [
        TokenSource.parse("20"),
        TokenSource.parse("20,40"),
        TokenSource.parse("sum"),
        TokenSource.parse("layers:0+2"),
        TokenSource.parse("layer:9"),
    ]

    report = run_ablation(pipeline, sources, train=True)

    rows = {row.source: row for row in report.rows}
    assert [row.source for row in report.rows] == ["(20)", "(20,40)", "sum", "layers:0+2", "layer:9"]
    assert rows["(20)"].tokens_per_second == 50.0
    assert rows["(20,40)"].tokens_per_second == 75.0
    assert rows["sum"].streams == 1
    assert rows["layers:0+2"].tokens_per_second == 100.0
    for source in ["(20)", "(20,40)", "sum", "layers:0+2"]:
        assert rows[source].status == "ok", rows[source].reason
        assert rows[source].mcd is not None
    assert rows["(20)"].mean_tokens == 25.0
    assert rows["(20,40)"].mean_tokens == 38.0
    assert rows["layers:0+2"].mean_tokens == 50.0
    assert rows["layer:9"].absent
    assert "layer 9" in rows["layer:9"].reason

    summary = pipeline.out_dir / "ablation" / "summary.csv"
    assert len(summary.read_text().splitlines()) == 6
    assert (pipeline.out_dir / "ablation" / "sum" / "codebooks" / "stream_0_20ms.somdcb").exists()


def test_ablation_without_training_marks_rows_absent(pipeline):
    """Test that missing artifacts give absent rows when training is off."""
    report = run_ablation(pipeline, [TokenSource.parse("sum")], train=False)

    assert report.rows[0].absent
    assert report.rows[0].tokens_per_second == 50.0


def test_empty_ablation(pipeline):
    """Test that no sources give a header-only summary."""
    report = run_ablation(pipeline, [])

    assert report.rows == []
    lines = (pipeline.out_dir / "ablation" / "summary.csv").read_text().splitlines()
    assert lines == [
        "source,streams,tokens_per_second,mean_tokens,mcd,f0_rmse,semitone_acc,vuv_error,status"
    ]


def test_state_survives_reload(trained):
    """Test that a fresh state manager sees every completed stage as current."""
    state = StateManager(trained.out_dir)

    for stage in ["train-resyn", "fit-codebooks", "tokenize", "train-unit-vocoder", "resynth"]:
        assert state.is_stage_current(stage), stage


def test_ablation_geometry_failure_is_absent_row(pipeline, monkeypatch):
    """Test that a shape failure in one source leaves the other rows running."""
    real = ablation._evaluate_row

    def flaky(scoped, row, train):
        if row.source == "sum":
            raise ShapeError("generator expects 8 input channels, got 5")
        real(scoped, row, train)

    monkeypatch.setattr(ablation, "_evaluate_row", flaky)

    report = run_ablation(pipeline, [TokenSource.parse("sum"), TokenSource.parse("20")])

    assert report.rows[0].absent
    assert "8 input channels" in report.rows[0].reason
    assert report.rows[1].status == "ok"


def test_end_to_end_records_silence_floors(trained):
    """Test that the silence MCD is reported for every end-to-end utterance."""
    report = trained.end_to_end()

    assert sorted(report.silence_mcd) == ["synth_0001", "synth_0002"]
    assert all(floor > 0.0 for floor in report.silence_mcd.values())


def test_end_to_end_requires_separation_from_silence(trained, monkeypatch):
    """Test that output no closer than silence fails when separation is required."""
    monkeypatch.setattr(
        pipeline_module, "silence_floors", lambda pairs, config: {p.utt_id: 0.0 for p in pairs}
    )

    warned = trained.end_to_end()
    assert warned.items_processed == 2

    trained.config.metrics.require_separation = True
    with pytest.raises(NumericError, match="no closer to the reference than silence"):
        trained.end_to_end()
