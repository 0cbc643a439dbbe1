"""SingOMD CLI - Main entry point using Typer.

This module defines the main Typer application and registers all subcommands.
"""

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

app = typer.Typer(
    name="singomd",
    help="SingOMD - Multi-resolution discrete tokens for singing voice",
    add_completion=False,
)

console = Console()

__version__ = "0.1.0"


@app.callback(invoke_without_command=True)
def callback(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        Path("config/config.yaml"),
        "--config",
        "-c",
        help="Path to configuration file (YAML or JSON)",
        exists=False,  # Commands report a missing file with exit code 1
    ),
    verbose: bool = typer.Option(
        False,
        "--verbose",
        "-v",
        help="Enable verbose logging (DEBUG level)",
    ),
    quiet: bool = typer.Option(
        False,
        "--quiet",
        "-q",
        help="Suppress non-error output",
    ),
    version: bool = typer.Option(
        False,
        "--version",
        help="Show version and exit",
    ),
):
    """SingOMD - Singing-oriented multi-resolution discrete tokens.

    Stages, each runnable on its own:
    1. extract - front-end layer features per utterance
    2. train-resyn - resampler + vocoder on continuous features
    3. fit-codebooks / tokenize - k-means tokens per resolution
    4. train-unit-vocoder - vocoder on tokens
    5. resynth / evaluate - synthesis and objective metrics

    Plus end-to-end, ablate, gen-synthetic-data, status and info.
    """
    if version:
        console.print(f"SingOMD version {__version__}")
        raise typer.Exit()

    if ctx.obj is None:
        ctx.obj = {}

    ctx.obj["config_path"] = config
    ctx.obj["verbose"] = verbose
    ctx.obj["quiet"] = quiet

    if ctx.invoked_subcommand is None:
        console.print(ctx.get_help())


from src.cli.ablate import ablate_cmd
from src.cli.codebooks import fit_codebooks_cmd, tokenize_cmd
from src.cli.data import gen_synthetic_data_cmd
from src.cli.end_to_end import end_to_end_cmd
from src.cli.evaluate import evaluate_cmd
from src.cli.extract import extract_cmd
from src.cli.resynth import resynth_cmd
from src.cli.status import info_cmd, status_cmd
from src.cli.train import train_resyn_cmd, train_unit_vocoder_cmd

app.command(name="extract")(extract_cmd)
app.command(name="train-resyn")(train_resyn_cmd)
app.command(name="fit-codebooks")(fit_codebooks_cmd)
app.command(name="tokenize")(tokenize_cmd)
app.command(name="train-unit-vocoder")(train_unit_vocoder_cmd)
app.command(name="resynth")(resynth_cmd)
app.command(name="evaluate")(evaluate_cmd)
app.command(name="end-to-end")(end_to_end_cmd)
app.command(name="ablate")(ablate_cmd)
app.command(name="gen-synthetic-data")(gen_synthetic_data_cmd)
app.command(name="status")(status_cmd)
app.command(name="info")(info_cmd)


def main():
    """Entry point for the CLI application."""
    app()


if __name__ == "__main__":
    main()
