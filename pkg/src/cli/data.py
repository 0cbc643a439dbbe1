"""Data command - Generate the synthetic singing corpus."""

from pathlib import Path
from typing import Optional

import typer

from src.cli.common import SEED_OPTION, command_errors, console, load_run_config
from src.data.synthetic import generate_synthetic_corpus


def gen_synthetic_data_cmd(
    ctx: typer.Context,
    out: Path = typer.Option(Path("./data/synthetic"), "--out", "-o", help="Corpus directory"),
    clips: Optional[int] = typer.Option(None, "--clips", help="Clip count (overrides synthetic.clips)"),
    seed: Optional[int] = SEED_OPTION,
):
    """Write harmonic note sequences with vibrato as WAVs plus a manifest.

    Examples:
        singomd gen-synthetic-data --out data/synthetic --clips 24
    """
    with command_errors(ctx):
        config = load_run_config(ctx, seed=seed, overrides={"synthetic.clips": clips})
        manifest_path, manifest = generate_synthetic_corpus(out, config, config.seed)
        if not ctx.obj.get("quiet"):
            console.print(f"[green]Wrote {len(manifest)} clips; manifest at {manifest_path}[/green]")
