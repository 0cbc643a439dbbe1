"""Status and info commands - Show stage status and the resolved configuration."""

from pathlib import Path
from typing import Optional

import typer
from rich.panel import Panel
from rich.table import Table

from src.cli.common import OUT_OPTION, command_errors, console, load_run_config
from src.core.pipeline import STAGES
from src.core.state import StateManager
from src.resampler.ladder import tokens_per_second


def _stage_order(names) -> list[str]:
    """Main stages in pipeline order, then end-to-end, then scoped (ablation) stages by name."""
    names = set(names)
    ordered = [s for s in (*STAGES, "end-to-end") if s in names]
    return ordered + sorted(names - set(ordered))


def status_cmd(
    ctx: typer.Context,
    out: Optional[Path] = OUT_OPTION,
):
    """Show completed stages of a run and whether their artifacts are current.

    Examples:
        singomd status
        singomd status --out runs/desk
    """
    with command_errors(ctx):
        config = load_run_config(ctx, out=out)
        out_dir = Path(config.paths.out_dir)
        state_manager = StateManager(out_dir)
        stages = state_manager.state.stages

        if not stages:
            console.print(f"[yellow]No completed stages in {out_dir}. Run 'singomd extract' first.[/yellow]")
            return

        table = Table(title=f"Run Status: {out_dir}", show_header=True)
        table.add_column("Stage", style="cyan")
        table.add_column("Outputs", justify="right", style="green")
        table.add_column("Completed", style="dim")
        table.add_column("State")

        for name in _stage_order(stages):
            record = stages[name]
            current = state_manager.is_stage_current(name)
            table.add_row(
                name,
                str(len(record.outputs)),
                record.completed_at.strftime("%Y-%m-%d %H:%M"),
                "[green]current[/green]" if current else "[yellow]stale[/yellow]",
            )

        console.print(table)
        pending = [s for s in STAGES if s not in stages]
        if pending:
            console.print(f"\n[dim]Not yet run: {', '.join(pending)}[/dim]")


def info_cmd(ctx: typer.Context):
    """Show the resolved configuration and the token rates it implies.

    Examples:
        singomd info
        singomd -c config/config.yaml info
    """
    with command_errors(ctx):
        config = load_run_config(ctx)
        ladder = config.resampler.ladder

        config_info = f"""[bold]Configuration:[/bold]
Config File: {ctx.obj.get("config_path")}
Manifest: {config.paths.manifest}
Output Directory: {config.paths.out_dir}
Seed: {config.seed}
"""
        console.print(Panel(config_info, title="Configuration", border_style="cyan"))

        model_info = f"""[bold]Model:[/bold]
Sample Rate: {config.audio.sample_rate} Hz
Frame: {config.audio.frame_ms:g} ms ({config.hop_length} samples)
Front End: {config.ssl.source} ({config.ssl.layers} layers)
Ladder: {", ".join(f"{r:g}" for r in ladder)} ms
Codebook Size: {config.quantizer.k}
Token Rate: {tokens_per_second(ladder):g} tokens/s
"""
        console.print(Panel(model_info, title="Model", border_style="green"))
