"""Comparison of token sources: one evaluation row per resolution ladder or layer baseline."""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from src.core.errors import LadderError, ShapeError, SingOMDError
from src.core.logger import get_logger
from src.core.pipeline import Pipeline
from src.core.sources import TokenSource
from src.quantizer.tokens import load_tokens
from src.resampler.ladder import tokens_per_second

logger = get_logger(__name__)

ABLATION_FIELDS = (
    "source",
    "streams",
    "tokens_per_second",
    "mean_tokens",
    "mcd",
    "f0_rmse",
    "semitone_acc",
    "vuv_error",
    "status",
)


@dataclass
class AblationRow:
    """Token-rate arithmetic and test-split metrics of one token source.

    Metric fields stay None when the row is absent (an artifact was missing or failed).
    """

    source: str
    streams: int
    tokens_per_second: float
    mean_tokens: Optional[float] = None
    mcd: Optional[float] = None
    f0_rmse: Optional[float] = None
    semitone_acc: Optional[float] = None
    vuv_error: Optional[float] = None
    status: str = "ok"
    reason: str = ""

    @property
    def absent(self) -> bool:
        return self.status != "ok"

    def as_row(self) -> list[str]:
        def fmt(value, digits=4):
            return "" if value is None else f"{value:.{digits}f}"

        return [
            self.source,
            str(self.streams),
            f"{self.tokens_per_second:g}",
            fmt(self.mean_tokens, 1),
            fmt(self.mcd),
            fmt(self.f0_rmse),
            fmt(self.semitone_acc),
            fmt(self.vuv_error),
            self.status,
        ]


@dataclass
class AblationReport:
    rows: list[AblationRow] = field(default_factory=list)

    def write_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(ABLATION_FIELDS)
            for row in self.rows:
                writer.writerow(row.as_row())
        return path

    def table(self) -> str:
        header = ["Tokens", "Streams", "Tokens/s", "Tokens/utt", "MCD", "F0 RMSE", "S. Acc.", "V/UV E.", "Status"]
        rows = [[cell or "-" for cell in row.as_row()] for row in self.rows]
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
        lines.append("  ".join("-" * w for w in widths))
        lines.extend("  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows)
        return "\n".join(lines)

    def write_table(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.table() + "\n", encoding="utf-8")
        return path

    def __str__(self) -> str:
        absent = sum(row.absent for row in self.rows)
        return f"Ablation Report: {len(self.rows)} rows, {absent} absent"


def _evaluate_row(pipeline: Pipeline, row: AblationRow, train: bool) -> None:
    if train:
        evaluation = pipeline.run_all(skip_current=True)[-1].evaluation
    else:
        evaluation = pipeline.evaluate().evaluation
    counts = [
        load_tokens(pipeline.token_path(e.utt_id)).total_tokens for e in pipeline.entries("test")
    ]
    row.mean_tokens = float(np.mean(counts)) if counts else None
    row.mcd = evaluation.mcd_db
    row.f0_rmse = evaluation.f0_rmse
    row.semitone_acc = evaluation.semitone_acc
    row.vuv_error = evaluation.vuv_error


def run_ablation(
    pipeline: Pipeline,
    sources: Sequence[TokenSource],
    train: bool = True,
) -> AblationReport:
    """Evaluate every token source under ``ablation/<tag>/`` and tabulate the rows.

    Sources whose artifacts are missing (``train=False``) or whose stages fail are
    kept as absent rows; the run continues with the next source.
    """
    report = AblationReport()
    frame_ms = pipeline.config.audio.frame_ms
    for source in sources:
        resolutions = source.resolutions_ms(frame_ms)
        row = AblationRow(str(source), len(resolutions), tokens_per_second(resolutions))
        try:
            _evaluate_row(pipeline.scoped(source), row, train)
        except (SingOMDError, ShapeError, LadderError) as e:
            row.status, row.reason = "absent", str(e)
            logger.warning(f"Ablation row {source} absent: {e}")
        report.rows.append(row)
        logger.info(f"Ablation row {source}: {row.status}")

    out = pipeline.out_dir / "ablation"
    report.write_csv(out / "summary.csv")
    report.write_table(out / "summary.txt")
    logger.info(str(report))
    return report
