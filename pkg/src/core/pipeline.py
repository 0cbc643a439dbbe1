"""Stage orchestration for the token pipeline.

Stages run strictly in order: extract, train-resyn, fit-codebooks, tokenize,
train-unit-vocoder, resynth, evaluate. Each stage records the checksums of what it
consumed and produced in ``state.json``; downstream stages verify those checksums and
refuse stale inputs.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from src.core.config import RunConfig, save_resolved_config
from src.core.errors import ConfigError, DataError, NumericError, SingOMDError
from src.core.logger import get_logger
from src.core.manifest import Manifest, ManifestEntry, Split
from src.core.sources import TokenSource
from src.core.state import StageRecord, StateManager
from src.engine.tensor import no_grad
from src.features.audio import WaveBuffer, load_wave, save_wave
from src.features.dump import load_feature_dump, save_feature_dump
from src.features.ssl import LayerStack, extract_pseudo_ssl
from src.metrics.report import EvalPair, EvalReport, evaluate_pair_set, silence_floors
from src.quantizer.codebook import Codebook, load_codebook, save_codebook, tokenize
from src.quantizer.kmeans import kmeans_fit
from src.quantizer.tokens import TokenStreams, load_tokens, save_tokens, tokenize_multi
from src.utils.checksum import file_checksum, has_file_changed
from src.vocoder.models import ResynthesisModel, UnitVocoderModel, load_model
from src.vocoder.trainer import ResynthesisTrainer, TrainingItem

logger = get_logger(__name__)

STAGES = (
    "extract",
    "train-resyn",
    "fit-codebooks",
    "tokenize",
    "train-unit-vocoder",
    "resynth",
    "evaluate",
)


@dataclass
class StageReport:
    """Report for one pipeline stage."""

    stage: str
    items_processed: int = 0
    items_skipped: int = 0
    outputs: list[Path] = field(default_factory=list)
    errors: int = 0
    error_details: list[str] = field(default_factory=list)
    time_elapsed: float = 0.0
    evaluation: Optional[EvalReport] = None
    silence_mcd: dict[str, float] = field(default_factory=dict)

    def __str__(self) -> str:
        """Format as readable summary."""
        lines = [
            f"{self.stage}:",
            f"  Items: {self.items_processed} processed, {self.items_skipped} skipped",
            f"  Outputs: {len(self.outputs)}",
            f"  Errors: {self.errors}",
            f"  Time: {self.time_elapsed:.2f}s",
        ]
        if self.error_details:
            lines.append("  Error details:")
            for error in self.error_details[:5]:
                lines.append(f"    - {error}")
            if len(self.error_details) > 5:
                lines.append(f"    ... and {len(self.error_details) - 5} more")
        return "\n".join(lines)


@dataclass
class RunLayout:
    """Artifact directories of one token source under the run output directory."""

    root: Path

    @property
    def resyn_dir(self) -> Path:
        return self.root / "resyn"

    @property
    def codebooks_dir(self) -> Path:
        return self.root / "codebooks"

    @property
    def tokens_dir(self) -> Path:
        return self.root / "tokens"

    @property
    def unit_dir(self) -> Path:
        return self.root / "unit_vocoder"

    @property
    def resynth_dir(self) -> Path:
        return self.root / "resynth"

    @property
    def eval_dir(self) -> Path:
        return self.root / "eval"

    @property
    def end_to_end_dir(self) -> Path:
        return self.root / "end_to_end"

    def codebook_path(self, stream: int, resolution_ms: float) -> Path:
        return self.codebooks_dir / f"stream_{stream}_{resolution_ms:g}ms.somdcb"


class Pipeline:
    """Run pipeline stages for one token source.

    Args:
        config: Resolved run configuration
        manifest: Utterances and their splits
        out_dir: Run output directory (default ``config.paths.out_dir``)
        source: Token source (default: the configured resampler ladder)
        state: Shared state manager (default: one over ``out_dir``)
        scope: Sub-directory and stage-name prefix, e.g. ``ablation/sum/``
        on_item: Called with each utterance id as per-item stages finish it
    """

    def __init__(
        self,
        config: RunConfig,
        manifest: Manifest,
        out_dir: Optional[Path] = None,
        source: Optional[TokenSource] = None,
        state: Optional[StateManager] = None,
        scope: str = "",
        on_item: Optional[Callable[[str], None]] = None,
    ):
        self.config = config
        self.manifest = manifest
        self.out_dir = Path(out_dir or config.paths.out_dir)
        self.source = source or TokenSource.from_ladder(config.resampler.resolution_ladder())
        self.state = state or StateManager(self.out_dir)
        self.scope = scope
        self.layout = RunLayout(self.out_dir / scope if scope else self.out_dir)
        self.features_dir = self.out_dir / "features"
        self.on_item = on_item
        self._resyn_model: Optional[ResynthesisModel] = None
        self._verified: set[str] = set()
        if self.source.needs_resampler and self.source.ladder.finest_ms != config.audio.frame_ms:
            raise ConfigError(
                f"ladder {self.source.ladder} does not start at frame_ms {config.audio.frame_ms:g}"
            )
        if not scope:
            save_resolved_config(config, self.out_dir)

    def scoped(self, source: TokenSource) -> "Pipeline":
        """Pipeline for another source under ``ablation/<tag>/``, sharing features and state."""
        return Pipeline(
            self.config,
            self.manifest,
            self.out_dir,
            source=source,
            state=self.state,
            scope=f"ablation/{source.tag}/",
            on_item=self.on_item,
        )

    def stage_name(self, stage: str) -> str:
        return f"{self.scope}{stage}"

    @property
    def model_config(self) -> RunConfig:
        """Run config with the resampler ladder set to this source's ladder."""
        if not self.source.needs_resampler:
            return self.config
        ladder = list(self.source.ladder.resolutions_ms)
        if ladder == list(self.config.resampler.ladder):
            return self.config
        config = self.config.model_copy(deep=True)
        config.resampler.ladder = ladder
        return config

    def entries(self, split: Optional[Split]) -> list[ManifestEntry]:
        return self.manifest.split(split)

    def feature_path(self, utt_id: str) -> Path:
        return self.features_dir / f"{utt_id}.somdfeat"

    def token_path(self, utt_id: str) -> Path:
        return self.layout.tokens_dir / f"{utt_id}.json"

    def _tick(self, utt_id: str) -> None:
        if self.on_item is not None:
            self.on_item(utt_id)

    def _verify(self, stage: str, paths=None) -> StageRecord:
        """Check a stage in full once per pipeline, then only the requested outputs."""
        name = self.stage_name(stage)
        if name in self._verified:
            record = self.state.verify_stage(name, paths)
        else:
            record = self.state.verify_stage(name, check_inputs=True)
            self._verified.add(name)
        recorded = record.params.get("source")
        if recorded is not None and recorded != self.source.tag:
            raise DataError(
                f"{self.stage_name(stage)} was produced for {recorded}, not {self.source.tag}"
            )
        return record

    def load_stack(self, utt_id: str) -> LayerStack:
        path = self.feature_path(utt_id)
        self.state.verify_stage("extract", [path])
        return load_feature_dump(path)

    def load_reference(self, entry: ManifestEntry) -> WaveBuffer:
        return load_wave(self.manifest.wav_path(entry), self.config.audio.sample_rate)

    def _source_tag_params(self, **params) -> dict:
        return {"source": self.source.tag, **params}

    def _extract_input(self, entry: ManifestEntry) -> Path:
        """The file features are derived from: the WAV, or an external dump."""
        ssl = self.config.ssl
        if ssl.source == "dump":
            if not ssl.dump_dir:
                raise ConfigError("ssl.source is 'dump' but ssl.dump_dir is not set")
            return Path(ssl.dump_dir) / f"{entry.utt_id}.somdfeat"
        return self.manifest.wav_path(entry)

    def _compute_stack(self, entry: ManifestEntry) -> LayerStack:
        ssl = self.config.ssl
        if ssl.source == "dump":
            stack = load_feature_dump(self._extract_input(entry))
            if not np.isclose(stack.frame_ms, self.config.audio.frame_ms):
                raise DataError(
                    f"{entry.utt_id}: dump hop {stack.frame_ms:g} ms != frame_ms "
                    f"{self.config.audio.frame_ms:g}"
                )
            return stack
        wave = self.load_reference(entry)
        return extract_pseudo_ssl(
            wave, ssl.layers, self.config.analysis.n_mels, self.config.audio.frame_ms, self.config.analysis
        )

    def _extract_params(self) -> dict:
        return {
            "ssl_source": self.config.ssl.source,
            "layers": self.config.ssl.layers,
            "analysis": self.config.analysis.model_dump(mode="json"),
            "sample_rate": self.config.audio.sample_rate,
            "frame_ms": self.config.audio.frame_ms,
        }

    def extract(self) -> StageReport:
        """Write one feature dump per manifest utterance.

        An utterance is skipped when its input file, its dump and the extraction
        parameters are all unchanged since the last run.
        """
        report = StageReport("extract")
        start = time.perf_counter()
        entries = self.entries(None)
        params = self._extract_params()
        previous = self.state.get_stage("extract")
        same_params = previous is not None and previous.params == params

        def run(entry: ManifestEntry) -> tuple[str, Optional[str]]:
            dump = self.feature_path(entry.utt_id)
            try:
                input_ck = file_checksum(self._extract_input(entry))
                record = self.state.get_feature(entry.utt_id)
                if (
                    same_params
                    and record is not None
                    and record.wav_checksum == input_ck
                    and not has_file_changed(dump, record.dump_checksum)
                ):
                    logger.debug(f"{entry.utt_id}: features up to date")
                    return "skipped", None
                stack = self._compute_stack(entry)
                save_feature_dump(dump, stack)
                self.state.record_feature(entry.utt_id, input_ck, file_checksum(dump), stack.frames)
                logger.debug(f"{entry.utt_id}: {stack.layers} x {stack.frames} x {stack.dims}")
                return "written", None
            except (SingOMDError, OSError) as e:
                return "error", f"{entry.utt_id}: {e}"
            finally:
                self._tick(entry.utt_id)

        with ThreadPoolExecutor(max_workers=self.config.processing.max_workers) as pool:
            results = list(pool.map(run, entries))

        produced, consumed = [], []
        for entry, (status, error) in zip(entries, results):
            if status == "error":
                report.errors += 1
                report.error_details.append(error)
                logger.error(error)
                continue
            if status == "skipped":
                report.items_skipped += 1
            else:
                report.items_processed += 1
            produced.append(self.feature_path(entry.utt_id))
            consumed.append(self._extract_input(entry))

        self.state.record_stage("extract", produced, consumed, params)
        report.outputs = produced
        report.time_elapsed = time.perf_counter() - start
        logger.info(
            f"extract: {report.items_processed} written, {report.items_skipped} unchanged, "
            f"{report.errors} failed"
        )
        return report

    def _training_items(self, inputs_for: Callable[[ManifestEntry], object]) -> list[TrainingItem]:
        entries = self.entries("train")
        if not entries:
            raise DataError("manifest has no train utterances")
        return [TrainingItem(e.utt_id, inputs_for(e), self.load_reference(e)) for e in entries]

    def train_resyn(self, steps: Optional[int] = None) -> StageReport:
        """Train fusion weights, transfer encoder, resampler and generator jointly."""
        if not self.source.needs_resampler:
            raise ConfigError(f"token source {self.source} has no resampler to train")
        report = StageReport("train-resyn")
        start = time.perf_counter()
        items = self._training_items(lambda e: self.load_stack(e.utt_id))
        first: LayerStack = items[0].inputs
        model = ResynthesisModel(self.model_config, first.layers, first.dims, seed=self.config.seed)
        trainer = ResynthesisTrainer(model, self.model_config, self.layout.resyn_dir, self.config.seed)
        result = trainer.train(items, steps=steps)
        report.outputs = [result.latest, result.trace_path]
        report.items_processed = len(result.losses)
        self.state.record_stage(
            self.stage_name("train-resyn"),
            report.outputs,
            [self.feature_path(item.utt_id) for item in items],
            self._source_tag_params(
                layers=first.layers,
                dims=first.dims,
                steps=len(result.losses),
                fusion_weights=[float(w) for w in model.fusion.effective()],
            ),
        )
        self._resyn_model = model
        report.time_elapsed = time.perf_counter() - start
        return report

    def load_resyn_model(self) -> ResynthesisModel:
        """Latest resynthesis checkpoint of this source, after a staleness check."""
        if self._resyn_model is None:
            record = self._verify("train-resyn")
            model = ResynthesisModel(
                self.model_config, record.params["layers"], record.params["dims"], seed=self.config.seed
            )
            load_model(model, self.layout.resyn_dir / "latest.ckpt")
            self._resyn_model = model
        return self._resyn_model

    def fit_codebooks(self, k: Optional[int] = None) -> StageReport:
        """Fit one k-means codebook per stream on the train split."""
        report = StageReport("fit-codebooks")
        start = time.perf_counter()
        quantizer = self.config.quantizer
        k = k or quantizer.k
        model = self.load_resyn_model() if self.source.needs_resampler else None
        entries = self.entries("train")
        if not entries:
            raise DataError("manifest has no train utterances")

        resolutions = self.source.resolutions_ms(self.config.audio.frame_ms)
        frames: list[list[np.ndarray]] = [[] for _ in resolutions]
        for entry in entries:
            for stream, features in enumerate(self.source.stream_features(self.load_stack(entry.utt_id), model)):
                frames[stream].append(features.T)
            report.items_processed += 1

        for stream, (chunks, resolution) in enumerate(zip(frames, resolutions)):
            result = kmeans_fit(
                np.concatenate(chunks),
                k,
                seed=self.config.seed + stream,
                max_iters=quantizer.max_iters,
                tol=quantizer.tol,
                chunk_size=quantizer.chunk_size,
                max_workers=self.config.processing.max_workers,
            )
            book = Codebook(result.centroids, resolution)
            report.outputs.append(save_codebook(self.layout.codebook_path(stream, resolution), book))
            logger.info(
                f"codebook {stream} ({resolution:g} ms): k={k}, distortion {result.distortion:.6g} "
                f"after {result.iterations} iterations"
            )

        inputs = [self.feature_path(e.utt_id) for e in entries]
        if model is not None:
            inputs.append(self.layout.resyn_dir / "latest.ckpt")
        self.state.record_stage(
            self.stage_name("fit-codebooks"),
            report.outputs,
            inputs,
            self._source_tag_params(k=k, resolutions_ms=resolutions),
        )
        report.time_elapsed = time.perf_counter() - start
        return report

    def load_codebooks(self) -> list[Codebook]:
        self._verify("fit-codebooks")
        resolutions = self.source.resolutions_ms(self.config.audio.frame_ms)
        return [
            load_codebook(self.layout.codebook_path(stream, resolution))
            for stream, resolution in enumerate(resolutions)
        ]

    def tokens_for(self, stack: LayerStack, books: list[Codebook], utt_id: str) -> TokenStreams:
        """Token streams of one utterance from its front-end layers."""
        chunk = self.config.quantizer.chunk_size
        if self.source.needs_resampler:
            with no_grad():
                mrf = self.load_resyn_model().encode(stack)
            return tokenize_multi(mrf, books, utt_id, chunk)
        features = self.source.stream_features(stack)
        if len(features) != len(books):
            raise DataError(f"{len(features)} streams but {len(books)} codebooks")
        streams = [tokenize(f, book, chunk) for f, book in zip(features, books)]
        return TokenStreams(
            [self.config.audio.frame_ms],
            streams,
            [book.content_hash for book in books],
            utt_id,
            self.source.resolutions_ms(self.config.audio.frame_ms),
        )

    def tokenize(self, split: Optional[Split] = None) -> StageReport:
        """Write a token file per utterance (all splits by default)."""
        report = StageReport("tokenize")
        start = time.perf_counter()
        books = self.load_codebooks()
        entries = self.entries(split)
        for entry in entries:
            tokens = self.tokens_for(self.load_stack(entry.utt_id), books, entry.utt_id)
            report.outputs.append(save_tokens(self.token_path(entry.utt_id), tokens))
            report.items_processed += 1
            self._tick(entry.utt_id)
        inputs = [self.layout.codebook_path(i, r) for i, r in enumerate(self._resolutions())]
        inputs += [self.feature_path(e.utt_id) for e in entries]
        self.state.record_stage(
            self.stage_name("tokenize"),
            report.outputs,
            inputs,
            self._source_tag_params(split=split, codebooks=[b.content_hash for b in books]),
        )
        report.time_elapsed = time.perf_counter() - start
        logger.info(f"tokenize: {report.items_processed} token files in {self.layout.tokens_dir}")
        return report

    def _resolutions(self) -> list[float]:
        return self.source.resolutions_ms(self.config.audio.frame_ms)

    def load_tokens(self, utt_id: str, books: Optional[list[Codebook]] = None) -> TokenStreams:
        path = self.token_path(utt_id)
        self._verify("tokenize", [path])
        tokens = load_tokens(path)
        if books is not None and tokens.codebooks != [b.content_hash for b in books]:
            raise DataError(f"{path.name} was tokenized with different codebooks")
        return tokens

    def train_unit_vocoder(self, steps: Optional[int] = None) -> StageReport:
        """Train the token-driven generator, warm-started from the resynthesis generator."""
        report = StageReport("train-unit-vocoder")
        start = time.perf_counter()
        books = self.load_codebooks()
        items = self._training_items(lambda e: self.load_tokens(e.utt_id, books))
        model = UnitVocoderModel(self.config, [b.k for b in books], seed=self.config.seed)

        warm = False
        inputs = [self.token_path(item.utt_id) for item in items]
        if (
            self.config.unit_vocoder.warm_start
            and self.source.needs_resampler
            and self.config.unit_vocoder.embed_dim == self.config.resampler.width
        ):
            self._verify("train-resyn")
            checkpoint = self.layout.resyn_dir / "latest.ckpt"
            loaded = model.warm_start(checkpoint)
            warm = bool(loaded)
            inputs.append(checkpoint)
            logger.info(f"Warm-started {len(loaded)} generator tensors from {checkpoint}")
        elif self.config.unit_vocoder.warm_start and self.source.needs_resampler:
            logger.warning(
                f"embed_dim {self.config.unit_vocoder.embed_dim} != resampler width "
                f"{self.config.resampler.width}; unit vocoder starts cold"
            )

        trainer = ResynthesisTrainer(model, self.config, self.layout.unit_dir, self.config.seed)
        result = trainer.train(items, steps=steps)
        report.outputs = [result.latest, result.trace_path]
        report.items_processed = len(result.losses)
        self.state.record_stage(
            self.stage_name("train-unit-vocoder"),
            report.outputs,
            inputs,
            self._source_tag_params(
                vocab_sizes=[b.k for b in books], steps=len(result.losses), warm_start=warm
            ),
        )
        report.time_elapsed = time.perf_counter() - start
        return report

    def load_unit_vocoder(self) -> UnitVocoderModel:
        record = self._verify("train-unit-vocoder")
        model = UnitVocoderModel(self.config, record.params["vocab_sizes"], seed=self.config.seed)
        load_model(model, self.layout.unit_dir / "latest.ckpt")
        return model

    def synthesize(self, model: UnitVocoderModel, tokens: TokenStreams) -> WaveBuffer:
        with no_grad():
            samples = model.synthesize(tokens).data.reshape(-1)
        return WaveBuffer(samples.astype(np.float64), self.config.audio.sample_rate)

    def resynth(self, split: Split = "test") -> StageReport:
        """Vocode each utterance's token file into ``resynth/<utt_id>.wav``."""
        report = StageReport("resynth")
        start = time.perf_counter()
        books = self.load_codebooks()
        model = self.load_unit_vocoder()
        entries = self.entries(split)
        for entry in entries:
            wave = self.synthesize(model, self.load_tokens(entry.utt_id, books))
            report.outputs.append(save_wave(self.layout.resynth_dir / f"{entry.utt_id}.wav", wave))
            report.items_processed += 1
            self._tick(entry.utt_id)
        self.state.record_stage(
            self.stage_name("resynth"),
            report.outputs,
            [self.layout.unit_dir / "latest.ckpt"] + [self.token_path(e.utt_id) for e in entries],
            self._source_tag_params(split=split),
        )
        report.time_elapsed = time.perf_counter() - start
        return report

    def _write_evaluation(self, evaluation: EvalReport, directory: Path) -> list[Path]:
        return [
            evaluation.write_csv(directory / "report.csv"),
            evaluation.write_table(directory / "report.txt"),
        ]

    def evaluate(self, split: Split = "test") -> StageReport:
        """Compare resynthesized test audio against the references."""
        report = StageReport("evaluate")
        start = time.perf_counter()
        entries = self.entries(split)
        paths = [self.layout.resynth_dir / f"{e.utt_id}.wav" for e in entries]
        self._verify("resynth", paths)
        pairs = [
            EvalPair(e.utt_id, self.manifest.wav_path(e), path) for e, path in zip(entries, paths)
        ]
        evaluation = evaluate_pair_set(pairs, self.config)
        report.evaluation = evaluation
        report.items_processed = len(evaluation.pairs)
        report.items_skipped = len(evaluation.skipped)
        report.outputs = self._write_evaluation(evaluation, self.layout.eval_dir)
        self.state.record_stage(
            self.stage_name("evaluate"), report.outputs, paths, self._source_tag_params(split=split)
        )
        report.time_elapsed = time.perf_counter() - start
        return report

    def end_to_end(self, split: Split = "test") -> StageReport:
        """Features, resampler, tokens, unit vocoder and evaluation for each test utterance.

        Raises:
            DataError: Naming the failing stage and utterance
            NumericError: Naming the failing stage and utterance
        """
        report = StageReport("end-to-end")
        start = time.perf_counter()
        out = self.layout.end_to_end_dir
        try:
            books = self.load_codebooks()
            model = self.load_unit_vocoder()
            if self.source.needs_resampler:
                self.load_resyn_model()
        except SingOMDError as e:
            raise DataError(f"end-to-end load failed: {e}") from e

        pairs = []
        for entry in self.entries(split):
            stage = "features"
            try:
                stack = self.load_stack(entry.utt_id)
                stage = "tokenize"
                tokens = self.tokens_for(stack, books, entry.utt_id)
                save_tokens(out / "tokens" / f"{entry.utt_id}.json", tokens)
                stage = "unit-vocoder"
                wave = self.synthesize(model, tokens)
                path = save_wave(out / "wavs" / f"{entry.utt_id}.wav", wave)
            except NumericError as e:
                raise NumericError(f"end-to-end {stage} failed for {entry.utt_id}: {e}") from e
            except (SingOMDError, ValueError) as e:
                raise DataError(f"end-to-end {stage} failed for {entry.utt_id}: {e}") from e
            report.outputs.append(path)
            report.items_processed += 1
            pairs.append(EvalPair(entry.utt_id, self.manifest.wav_path(entry), path))
            self._tick(entry.utt_id)

        evaluation = evaluate_pair_set(pairs, self.config)
        report.evaluation = evaluation
        report.silence_mcd = self._check_separation(evaluation, pairs)
        report.outputs += self._write_evaluation(evaluation, out)
        self.state.record_stage(
            self.stage_name("end-to-end"),
            report.outputs,
            [self.layout.unit_dir / "latest.ckpt"] + [self.feature_path(p.utt_id) for p in pairs],
            self._source_tag_params(split=split),
        )
        report.time_elapsed = time.perf_counter() - start
        return report

    def _check_separation(self, evaluation: EvalReport, pairs: list[EvalPair]) -> dict[str, float]:
        """Compare each utterance MCD with its reference-vs-silence MCD.

        Returns:
            The silence MCD per utterance

        Raises:
            NumericError: With ``metrics.require_separation``, when any utterance is not below it
        """
        floors = silence_floors(pairs, self.config)
        failures = [
            f"{m.utt_id}: MCD {m.mcd:.3f} dB is not below silence ({floors[m.utt_id]:.3f} dB)"
            for m in evaluation.pairs
            if m.mcd >= floors[m.utt_id]
        ]
        if failures and self.config.metrics.require_separation:
            raise NumericError(
                f"end-to-end output is no closer to the reference than silence for "
                f"{len(failures)} utterances; {failures[0]}"
            )
        for failure in failures:
            logger.warning(failure)
        return floors

    def run_all(
        self,
        resyn_steps: Optional[int] = None,
        unit_steps: Optional[int] = None,
        skip_current: bool = False,
    ) -> list[StageReport]:
        """Run every stage in order and return their reports.

        With ``skip_current``, trained stages whose inputs and outputs are unchanged
        since they ran are reused. Extraction (itself incremental) and evaluation always run.

        Raises:
            DataError: If extraction failed for any utterance
        """
        plan: list[tuple[str, Callable[[], StageReport]]] = [
            ("extract", self.extract),
            ("train-resyn", lambda: self.train_resyn(resyn_steps)),
            ("fit-codebooks", self.fit_codebooks),
            ("tokenize", self.tokenize),
            ("train-unit-vocoder", lambda: self.train_unit_vocoder(unit_steps)),
            ("resynth", self.resynth),
            ("evaluate", self.evaluate),
        ]
        reusable = {"train-resyn", "fit-codebooks", "tokenize", "train-unit-vocoder", "resynth"}
        reports = []
        for stage, run in plan:
            if stage == "train-resyn" and not self.source.needs_resampler:
                continue
            name = self.stage_name(stage)
            if skip_current and stage in reusable and self.state.is_stage_current(name):
                logger.info(f"{name}: up to date, reusing")
                continue
            report = run()
            if report.errors:
                raise DataError(
                    f"{stage} failed for {report.errors} utterances: {report.error_details[0]}"
                )
            reports.append(report)
        return reports
