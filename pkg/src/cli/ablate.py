"""Ablate command - Compare resolution ladders and layer baselines."""

from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from src.cli.common import (
    MANIFEST_OPTION,
    OUT_OPTION,
    SEED_OPTION,
    command_errors,
    console,
    load_run_config,
    make_pipeline,
    parse_ladder,
)
from src.core.ablation import AblationReport, run_ablation
from src.core.sources import TokenSource
from src.resampler.ladder import ResolutionLadder


def display_ablation(report: AblationReport) -> None:
    table = Table(title="Ablation", show_header=True)
    table.add_column("Tokens", style="cyan")
    table.add_column("Streams", justify="right")
    table.add_column("Tokens/s", justify="right")
    table.add_column("Tokens/utt", justify="right")
    table.add_column("MCD", justify="right")
    table.add_column("F0 RMSE", justify="right")
    table.add_column("S. Acc.", justify="right")
    table.add_column("V/UV E.", justify="right")
    table.add_column("Status")
    for row in report.rows:
        cells = [cell or "-" for cell in row.as_row()]
        style = "yellow" if row.absent else None
        table.add_row(*cells, style=style)
    console.print(table)
    for row in report.rows:
        if row.absent:
            console.print(f"[yellow]{row.source}: {row.reason}[/yellow]")


def ablate_cmd(
    ctx: typer.Context,
    manifest: Optional[Path] = MANIFEST_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    ladders: Optional[list[str]] = typer.Option(
        None, "--ladder", help="Ladder to compare (repeatable); defaults to ablation.ladders"
    ),
    baselines: Optional[list[str]] = typer.Option(
        None, "--baseline", help="Layer baseline: layer:<i>, layers:<i>+<j>, sum (repeatable)"
    ),
    train: Optional[bool] = typer.Option(
        None, "--train/--no-train", help="Train missing artifacts (default: ablation.train)"
    ),
):
    """Evaluate one row per token source and write ablation/summary.csv.

    Rows whose artifacts are missing or whose stages fail are reported as
    absent; the remaining rows still run.

    Examples:
        singomd ablate
        singomd ablate --ladder 20 --ladder 20,40,80 --baseline sum
        singomd ablate --no-train
    """
    with command_errors(ctx):
        config = load_run_config(ctx, manifest=manifest, out=out, seed=seed)
        pipeline = make_pipeline(config)

        if ladders:
            ladder_values = [parse_ladder(text) for text in ladders]
        else:
            ladder_values = config.ablation.ladders
        sources = [TokenSource.from_ladder(ResolutionLadder(tuple(ladder))) for ladder in ladder_values]
        baseline_texts = baselines or config.ablation.baselines
        sources += [TokenSource.parse(text) for text in baseline_texts]
        if train is None:
            train = config.ablation.train

        if not sources:
            if not ctx.obj.get("quiet"):
                console.print("[yellow]No token sources to compare.[/yellow]")
                display_ablation(AblationReport())
            return

        if not ctx.obj.get("quiet"):
            console.print(f"[cyan]Comparing {len(sources)} token sources...[/cyan]")
        report = run_ablation(pipeline, sources, train=train)
        if not ctx.obj.get("quiet"):
            display_ablation(report)
            console.print(f"[green]Summary written to {pipeline.out_dir / 'ablation'}[/green]")
