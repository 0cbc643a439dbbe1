"""Options and helpers shared by the pipeline commands."""

from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Optional

import typer
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn
from rich.table import Table

from src.core.config import RunConfig, load_config
from src.core.errors import ConfigError, SingOMDError
from src.core.logger import get_logger, set_log_level, setup_logging
from src.core.manifest import Manifest, load_manifest
from src.core.pipeline import Pipeline, StageReport
from src.core.sources import TokenSource
from src.resampler.ladder import ResolutionLadder

console = Console()
logger = get_logger(__name__)

MANIFEST_OPTION = typer.Option(None, "--manifest", "-m", help="JSON Lines manifest (overrides paths.manifest)")
OUT_OPTION = typer.Option(None, "--out", "-o", help="Run output directory (overrides paths.out_dir)")
SEED_OPTION = typer.Option(None, "--seed", help="Seed for every stochastic stage")
LADDER_OPTION = typer.Option(None, "--ladder", help='Resolution ladder in ms, e.g. "20,40,80"')
K_OPTION = typer.Option(None, "--k", help="Codebook size per resolution")
SOURCE_OPTION = typer.Option(
    None, "--source", help="Token source instead of the ladder: layer:<i>, layers:<i>+<j>, sum"
)


def parse_ladder(text: Optional[str]) -> Optional[list[float]]:
    """``"20,40,80"`` -> ``[20.0, 40.0, 80.0]``; invalid ladders exit with code 1."""
    if text is None:
        return None
    try:
        return list(ResolutionLadder.parse(text).resolutions_ms)
    except ValueError as e:
        raise ConfigError(f"Invalid --ladder {text!r}: {e}") from e


def load_run_config(
    ctx: typer.Context,
    manifest: Optional[Path] = None,
    out: Optional[Path] = None,
    seed: Optional[int] = None,
    ladder: Optional[str] = None,
    k: Optional[int] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> RunConfig:
    """Load the config named by ``--config`` with CLI flags applied, and set up logging."""
    values: dict[str, Any] = {
        "paths.manifest": str(manifest) if manifest else None,
        "paths.out_dir": str(out) if out else None,
        "seed": seed,
        "resampler.ladder": parse_ladder(ladder),
        "quantizer.k": k,
    }
    values.update(overrides or {})
    config_path = ctx.obj.get("config_path") if ctx.obj else None
    if config_path is not None and not Path(config_path).exists():
        if Path(config_path) != Path("config/config.yaml"):
            raise ConfigError(f"Configuration file not found: {config_path}")
        logger.debug("config/config.yaml not found; using built-in defaults")
        config_path = None
    config = load_config(str(config_path) if config_path else None, values)

    setup_logging(config.logging)
    if ctx.obj and ctx.obj.get("verbose"):
        set_log_level("DEBUG")
    elif ctx.obj and ctx.obj.get("quiet"):
        set_log_level("ERROR")
    return config


def make_pipeline(config: RunConfig, source: Optional[str] = None) -> Pipeline:
    """Pipeline over the configured manifest for the ladder, or for ``--source`` when given."""
    manifest: Manifest = load_manifest(Path(config.paths.manifest))
    token_source = TokenSource.parse(source) if source else None
    return Pipeline(config, manifest, source=token_source)


@contextmanager
def command_errors(ctx: typer.Context) -> Iterator[None]:
    """Translate pipeline errors into exit codes: 1 config, 2 data, 3 numeric."""
    verbose = bool(ctx.obj and ctx.obj.get("verbose"))
    try:
        yield
    except typer.Exit:
        raise
    except SingOMDError as e:
        logger.error(str(e))
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(code=e.exit_code)
    except KeyboardInterrupt:
        console.print("\n[yellow]Cancelled by user[/yellow]")
        raise typer.Exit(130)
    except Exception as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        if verbose:
            console.print_exception()
        raise typer.Exit(1)


@contextmanager
def item_progress(ctx: typer.Context, description: str, total: int) -> Iterator:
    """Rich progress bar yielding an ``on_item`` callback (a no-op under ``--quiet``)."""
    if ctx.obj and ctx.obj.get("quiet"):
        yield lambda _utt_id: None
        return
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        console=console,
    ) as progress:
        task = progress.add_task(description, total=total or None)
        yield lambda _utt_id: progress.advance(task)


def display_report(ctx: typer.Context, report: StageReport) -> None:
    """Stage report as a two-column table."""
    if ctx.obj and ctx.obj.get("quiet"):
        return
    table = Table(title=f"{report.stage} report", show_header=False)
    table.add_column("Metric", style="cyan")
    table.add_column("Value", justify="right", style="green")
    table.add_row("Processed", str(report.items_processed))
    table.add_row("Skipped", str(report.items_skipped))
    table.add_row("Outputs", str(len(report.outputs)))
    table.add_row("Errors", str(report.errors), style="red" if report.errors else "green")
    table.add_row("Time elapsed", f"{report.time_elapsed:.2f}s")
    console.print(table)
    for detail in report.error_details[:5]:
        console.print(f"  [red]- {detail}[/red]")
