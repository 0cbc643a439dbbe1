"""Extract command - Dump front-end layer features for every manifest entry."""

from pathlib import Path
from typing import Optional

import typer

from src.cli.common import (
    MANIFEST_OPTION,
    OUT_OPTION,
    SEED_OPTION,
    command_errors,
    console,
    display_report,
    item_progress,
    load_run_config,
    make_pipeline,
)
from src.core.errors import DataError


def extract_cmd(
    ctx: typer.Context,
    manifest: Optional[Path] = MANIFEST_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
):
    """Extract layer features for all utterances.

    Dumps whose source WAV and parameters are unchanged are skipped.
    Exits with code 2 if any utterance failed.

    Examples:
        singomd extract
        singomd extract --manifest data/synthetic/manifest.jsonl --out runs/desk
    """
    with command_errors(ctx):
        config = load_run_config(ctx, manifest=manifest, out=out, seed=seed)
        pipeline = make_pipeline(config)
        with item_progress(ctx, "Extracting features...", len(pipeline.manifest)) as tick:
            pipeline.on_item = tick
            report = pipeline.extract()
        display_report(ctx, report)
        if report.errors:
            raise DataError(f"extraction failed for {report.errors} utterances")
        if not ctx.obj.get("quiet"):
            console.print(f"[green]Features written to {pipeline.features_dir}[/green]")
