"""Resynth command - Vocode held-out token streams back to audio."""

from pathlib import Path
from typing import Optional

import typer

from src.cli.common import (
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
from src.core.errors import DataError

SPLIT_OPTION = typer.Option("test", "--split", help="Split to synthesize")


def resynth_cmd(
    ctx: typer.Context,
    manifest: Optional[Path] = MANIFEST_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    ladder: Optional[str] = LADDER_OPTION,
    source: Optional[str] = SOURCE_OPTION,
    split: str = SPLIT_OPTION,
):
    """Synthesize WAVs from the stored tokens of one split.

    Examples:
        singomd resynth
    """
    with command_errors(ctx):
        config = load_run_config(ctx, manifest=manifest, out=out, seed=seed, ladder=ladder)
        pipeline = make_pipeline(config, source)
        with item_progress(ctx, "Synthesizing...", len(pipeline.entries(split))) as tick:
            pipeline.on_item = tick
            report = pipeline.resynth(split)
        display_report(ctx, report)
        if report.errors:
            raise DataError(f"synthesis failed for {report.errors} utterances")
