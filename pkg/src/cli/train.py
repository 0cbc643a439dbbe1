"""Train commands - Multi-resolution resynthesis model and unit vocoder."""

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
    console,
    display_report,
    load_run_config,
    make_pipeline,
)

STEPS_OPTION = typer.Option(None, "--steps", help="Optimizer steps (overrides training.steps)")


def train_resyn_cmd(
    ctx: typer.Context,
    manifest: Optional[Path] = MANIFEST_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    ladder: Optional[str] = LADDER_OPTION,
    steps: Optional[int] = STEPS_OPTION,
):
    """Train the resampler and vocoder on continuous features.

    Examples:
        singomd train-resyn --ladder 20,40,80 --steps 200
    """
    with command_errors(ctx):
        config = load_run_config(ctx, manifest=manifest, out=out, seed=seed, ladder=ladder)
        pipeline = make_pipeline(config)
        if not ctx.obj.get("quiet"):
            console.print(f"[cyan]Training resynthesis model for ladder {pipeline.source}...[/cyan]")
        report = pipeline.train_resyn(steps)
        display_report(ctx, report)


def train_unit_vocoder_cmd(
    ctx: typer.Context,
    manifest: Optional[Path] = MANIFEST_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    ladder: Optional[str] = LADDER_OPTION,
    source: Optional[str] = SOURCE_OPTION,
    steps: Optional[int] = STEPS_OPTION,
):
    """Train the vocoder on discrete token streams.

    Examples:
        singomd train-unit-vocoder --steps 200
        singomd train-unit-vocoder --source sum
    """
    with command_errors(ctx):
        config = load_run_config(ctx, manifest=manifest, out=out, seed=seed, ladder=ladder)
        pipeline = make_pipeline(config, source)
        if not ctx.obj.get("quiet"):
            console.print(f"[cyan]Training unit vocoder on {pipeline.source} tokens...[/cyan]")
        report = pipeline.train_unit_vocoder(steps)
        display_report(ctx, report)
