"""Codebook commands - Fit k-means codebooks and tokenize utterances."""

from pathlib import Path
from typing import Optional

import typer

from src.cli.common import (
    K_OPTION,
    LADDER_OPTION,
    MANIFEST_OPTION,
    OUT_OPTION,
    SEED_OPTION,
    SOURCE_OPTION,
    command_errors,
    display_report,
    item_progress,
    load_run_config,
    make_pipeline,
)
from src.core.errors import ConfigError, DataError


def fit_codebooks_cmd(
    ctx: typer.Context,
    manifest: Optional[Path] = MANIFEST_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    ladder: Optional[str] = LADDER_OPTION,
    source: Optional[str] = SOURCE_OPTION,
    k: Optional[int] = K_OPTION,
):
    """Fit one codebook per token stream on the train split.

    Examples:
        singomd fit-codebooks --k 64
        singomd fit-codebooks --source layer:2
    """
    with command_errors(ctx):
        config = load_run_config(ctx, manifest=manifest, out=out, seed=seed, ladder=ladder, k=k)
        pipeline = make_pipeline(config, source)
        report = pipeline.fit_codebooks()
        display_report(ctx, report)


def tokenize_cmd(
    ctx: typer.Context,
    manifest: Optional[Path] = MANIFEST_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    ladder: Optional[str] = LADDER_OPTION,
    source: Optional[str] = SOURCE_OPTION,
    split: Optional[str] = typer.Option(None, "--split", help="Only this split (train, valid, test)"),
):
    """Write token streams for every utterance.

    Examples:
        singomd tokenize
        singomd tokenize --split test
    """
    with command_errors(ctx):
        if split not in (None, "train", "valid", "test"):
            raise ConfigError(f"Unknown split {split!r}")
        config = load_run_config(ctx, manifest=manifest, out=out, seed=seed, ladder=ladder)
        pipeline = make_pipeline(config, source)
        with item_progress(ctx, "Tokenizing...", len(pipeline.entries(split))) as tick:
            pipeline.on_item = tick
            report = pipeline.tokenize(split)
        display_report(ctx, report)
        if report.errors:
            raise DataError(f"tokenization failed for {report.errors} utterances")
