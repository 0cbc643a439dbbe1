"""Evaluate command - Objective metrics of synthesized audio against references."""

from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from src.cli.common import (
    LADDER_OPTION,
    MANIFEST_OPTION,
    OUT_OPTION,
    SOURCE_OPTION,
    command_errors,
    console,
    load_run_config,
    make_pipeline,
)
from src.cli.resynth import SPLIT_OPTION
from src.metrics.report import EvalReport, evaluate_pair_set, load_eval_pairs


def _cell(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4f}"


def display_evaluation(ctx: typer.Context, report: EvalReport) -> None:
    if ctx.obj.get("quiet"):
        return
    table = Table(title="Evaluation", show_header=True)
    table.add_column("Utterance", style="cyan")
    table.add_column("MCD (dB)", justify="right")
    table.add_column("F0 RMSE", justify="right")
    table.add_column("S. Acc.", justify="right")
    table.add_column("V/UV E.", justify="right")
    for pair in report.pairs:
        table.add_row(
            pair.utt_id, _cell(pair.mcd), _cell(pair.f0_rmse), _cell(pair.semitone_acc), _cell(pair.vuv_error)
        )
    summary = report.summary()
    table.add_row(
        "[bold]mean[/bold]",
        _cell(summary.mcd),
        _cell(summary.f0_rmse),
        _cell(summary.semitone_acc),
        _cell(summary.vuv_error),
        style="green",
    )
    console.print(table)
    if report.skipped:
        console.print(f"[yellow]Skipped {len(report.skipped)}: {', '.join(report.skipped)}[/yellow]")


def evaluate_cmd(
    ctx: typer.Context,
    manifest: Optional[Path] = MANIFEST_OPTION,
    out: Optional[Path] = OUT_OPTION,
    ladder: Optional[str] = LADDER_OPTION,
    source: Optional[str] = SOURCE_OPTION,
    split: str = SPLIT_OPTION,
    pairs: Optional[Path] = typer.Option(
        None,
        "--pairs",
        help="JSON Lines list of utt_id/ref_path/syn_path to evaluate instead of a run",
    ),
    report_csv: Optional[Path] = typer.Option(None, "--report", help="Write the CSV report here"),
):
    """Compute MCD, F0 RMSE, semitone accuracy and V/UV error.

    Without --pairs, the resynthesized split of the run is evaluated and the
    report is written to <out>/eval/.

    Examples:
        singomd evaluate
        singomd evaluate --pairs pairs.jsonl --report report.csv
    """
    with command_errors(ctx):
        config = load_run_config(ctx, manifest=manifest, out=out, ladder=ladder)
        if pairs is not None:
            report = evaluate_pair_set(load_eval_pairs(pairs), config)
        else:
            report = make_pipeline(config, source).evaluate(split).evaluation
        if report_csv is not None:
            report.write_csv(report_csv)
        display_evaluation(ctx, report)
