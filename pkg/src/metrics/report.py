"""Per-utterance objective metrics and the corpus evaluation report."""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from src.core.config import RunConfig
from src.core.errors import DataError
from src.core.logger import get_logger
from src.features.audio import WaveBuffer, load_wave
from src.features.mel import MelAnalyzer
from src.metrics.f0 import extract_f0, f0_metrics
from src.metrics.mcd import mcd, silence_like

logger = get_logger(__name__)

REPORT_FIELDS = ("utt_id", "mcd", "f0_rmse", "semitone_acc", "vuv_error")


@dataclass
class PairMetrics:
    """Metrics of one reference / resynthesis pair."""

    utt_id: str
    mcd: float
    f0_rmse: Optional[float]
    semitone_acc: Optional[float]
    vuv_error: float

    def as_row(self) -> list[str]:
        return [
            self.utt_id,
            _fmt(self.mcd),
            _fmt(self.f0_rmse),
            _fmt(self.semitone_acc),
            _fmt(self.vuv_error),
        ]


@dataclass
class EvalPair:
    utt_id: str
    ref_path: Path
    syn_path: Path


def load_eval_pairs(path: Path) -> list[EvalPair]:
    """Read a JSON Lines pair list with ``utt_id``, ``ref_path`` and ``syn_path`` per line.

    Relative paths resolve against the file's directory.

    Raises:
        DataError: If the file is missing or a line is malformed
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Pair list not found: {path}")
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
                pairs.append(
                    EvalPair(
                        str(item["utt_id"]),
                        path.parent / item["ref_path"],
                        path.parent / item["syn_path"],
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise DataError(f"{path}:{line_no}: invalid pair entry: {e}") from e
    return pairs


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6f}"


def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


@dataclass
class EvalReport:
    """Per-utterance metrics in manifest order with unweighted corpus means.

    F0 means are taken over the utterances where the value is present.
    """

    pairs: list[PairMetrics] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    @property
    def mcd_db(self) -> Optional[float]:
        return _mean([p.mcd for p in self.pairs])

    @property
    def f0_rmse(self) -> Optional[float]:
        return _mean([p.f0_rmse for p in self.pairs])

    @property
    def semitone_acc(self) -> Optional[float]:
        return _mean([p.semitone_acc for p in self.pairs])

    @property
    def vuv_error(self) -> Optional[float]:
        return _mean([p.vuv_error for p in self.pairs])

    def summary(self) -> PairMetrics:
        return PairMetrics("mean", self.mcd_db, self.f0_rmse, self.semitone_acc, self.vuv_error)

    def write_csv(self, path: Path) -> Path:
        """Header ``utt_id,mcd,f0_rmse,semitone_acc,vuv_error``, one row per pair, then ``mean``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(REPORT_FIELDS)
            for pair in self.pairs:
                writer.writerow(pair.as_row())
            writer.writerow(self.summary().as_row())
        return path

    def table(self) -> str:
        """Aligned plain-text table with the summary row last."""
        header = ["Utterance", "MCD (dB)", "F0 RMSE", "S. Acc.", "V/UV E."]
        rows = [p.as_row() for p in self.pairs] + [self.summary().as_row()]
        rows = [[cell or "-" for cell in row] for row in rows]
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
        lines.append("  ".join("-" * w for w in widths))
        lines.extend("  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows)
        if self.skipped:
            lines.append(f"Skipped: {len(self.skipped)} ({', '.join(self.skipped)})")
        return "\n".join(lines)

    def write_table(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.table() + "\n", encoding="utf-8")
        return path

    def __str__(self) -> str:
        summary = self.summary()
        return (
            f"Evaluation Report: {len(self.pairs)} pairs, {len(self.skipped)} skipped; "
            f"MCD {_fmt(summary.mcd) or '-'} dB, F0 RMSE {_fmt(summary.f0_rmse) or '-'}, "
            f"S. Acc. {_fmt(summary.semitone_acc) or '-'}, V/UV E. {_fmt(summary.vuv_error) or '-'}"
        )


def evaluate_waves(utt_id: str, ref: WaveBuffer, syn: WaveBuffer, config: RunConfig) -> PairMetrics:
    """All four metrics for one pair of waveforms at the working rate."""
    analyzer = MelAnalyzer.from_config(config.audio, config.analysis)
    distortion = mcd(ref, syn, analyzer, config.metrics.mcd_order)
    pitch = f0_metrics(extract_f0(ref, config.metrics), extract_f0(syn, config.metrics))
    return PairMetrics(utt_id, distortion, pitch.f0_rmse, pitch.semitone_acc, pitch.vuv_error)


def silence_floors(pairs: Sequence[EvalPair], config: RunConfig) -> dict[str, float]:
    """MCD of each reference against an all-zero waveform of its length, by utterance."""
    analyzer = MelAnalyzer.from_config(config.audio, config.analysis)
    floors = {}
    for pair in pairs:
        ref = load_wave(pair.ref_path, config.audio.sample_rate)
        floors[pair.utt_id] = mcd(ref, silence_like(ref), analyzer, config.metrics.mcd_order)
    return floors


def evaluate_pair_set(
    pairs: Sequence[EvalPair],
    config: RunConfig,
    max_workers: Optional[int] = None,
) -> EvalReport:
    """Evaluate pairs concurrently; the report keeps the input order.

    Unreadable or too-short pairs are skipped with a warning and listed in ``skipped``.
    """
    rate = config.audio.sample_rate

    def run(pair: EvalPair) -> Optional[PairMetrics]:
        try:
            ref = load_wave(pair.ref_path, rate)
            syn = load_wave(pair.syn_path, rate)
            return evaluate_waves(pair.utt_id, ref, syn, config)
        except DataError as e:
            logger.warning(f"Skipping {pair.utt_id}: {e}")
            return None

    workers = max_workers or config.processing.max_workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, pairs))

    report = EvalReport()
    for pair, metrics in zip(pairs, results):
        if metrics is None:
            report.skipped.append(pair.utt_id)
        else:
            report.pairs.append(metrics)
    logger.info(str(report))
    return report
