"""End-to-end command - Audio to tokens to audio with the trained artifacts."""

from pathlib import Path
from typing import Optional

import typer

from src.cli.common import (
    LADDER_OPTION,
    MANIFEST_OPTION,
    OUT_OPTION,
    SOURCE_OPTION,
    command_errors,
    display_report,
    item_progress,
    load_run_config,
    make_pipeline,
)
from src.cli.evaluate import display_evaluation
from src.cli.resynth import SPLIT_OPTION


def end_to_end_cmd(
    ctx: typer.Context,
    manifest: Optional[Path] = MANIFEST_OPTION,
    out: Optional[Path] = OUT_OPTION,
    ladder: Optional[str] = LADDER_OPTION,
    source: Optional[str] = SOURCE_OPTION,
    split: str = SPLIT_OPTION,
):
    """Tokenize and resynthesize held-out audio in one pass, then evaluate it.

    Examples:
        singomd end-to-end
    """
    with command_errors(ctx):
        config = load_run_config(ctx, manifest=manifest, out=out, ladder=ladder)
        pipeline = make_pipeline(config, source)
        with item_progress(ctx, "Audio -> tokens -> audio...", len(pipeline.entries(split))) as tick:
            pipeline.on_item = tick
            report = pipeline.end_to_end(split)
        display_report(ctx, report)
        if report.evaluation is not None:
            display_evaluation(ctx, report.evaluation)
