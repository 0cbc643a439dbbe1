"""Configuration management for the SingOMD pipeline."""

import math
import os
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.core.errors import ConfigError
from src.resampler.ladder import ResolutionLadder


class Section(BaseModel):
    """Base for config sections: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


class AudioConfig(Section):
    """Waveform and base frame geometry."""

    sample_rate: int = Field(default=16000, gt=0, description="Working sample rate in Hz")
    frame_ms: float = Field(default=20.0, gt=0, description="Finest frame hop in milliseconds")

    @property
    def hop_length(self) -> int:
        """Samples per finest frame."""
        return int(round(self.sample_rate * self.frame_ms / 1000.0))


class AnalysisConfig(Section):
    """Log-mel analysis shared by the front end, the mel loss and MCD."""

    n_fft: int = Field(default=1024, gt=1, description="STFT window length in samples")
    n_mels: int = Field(default=80, gt=0, description="Mel bands")
    fmin: float = Field(default=0.0, ge=0, description="Lowest mel filter edge in Hz")
    fmax: Optional[float] = Field(default=None, description="Highest mel edge (None = Nyquist)")
    log_floor: float = Field(default=1e-5, gt=0, description="Floor applied before the log")


class SSLConfig(Section):
    """Multi-layer frame feature source."""

    source: Literal["pseudo", "dump"] = Field(
        default="pseudo", description="pseudo = built-in log-mel stand-in, dump = SOMDFEAT files"
    )
    layers: int = Field(default=6, ge=1, description="Pseudo front-end layer count")
    dump_dir: Optional[str] = Field(
        default=None, description="Directory of <utt_id>.somdfeat files when source is dump"
    )


class ResamplerConfig(Section):
    """Transfer encoder and multi-resolution resampler."""

    ladder: list[float] = Field(
        default_factory=lambda: [20.0, 40.0, 80.0], description="Resolutions in ms, finest first"
    )
    width: int = Field(default=512, ge=1, description="Transfer encoder / resampler channels")
    transfer_kernel: int = Field(default=7, ge=1, description="Transfer encoder kernel size")
    w_res: float = Field(default=math.sqrt(0.4), gt=0, description="Residual weight")

    @field_validator("ladder")
    @classmethod
    def validate_ladder(cls, ladder: list[float]) -> list[float]:
        """Reject ladders that are not strictly increasing integer multiples."""
        ResolutionLadder(tuple(ladder))
        return ladder

    @field_validator("transfer_kernel")
    @classmethod
    def validate_odd(cls, kernel: int) -> int:
        if kernel % 2 == 0:
            raise ValueError("transfer_kernel must be odd to preserve the frame count")
        return kernel

    def resolution_ladder(self) -> ResolutionLadder:
        return ResolutionLadder(tuple(self.ladder))


class GeneratorConfig(Section):
    """HiFi-GAN style generator geometry."""

    base_channels: int = Field(default=512, ge=1, description="Channels after the input conv")
    upsample_ratios: list[int] = Field(
        default_factory=lambda: [8, 5, 4, 2], description="Per-stage upsample factors"
    )
    residual_block_kernel_sizes: list[int] = Field(
        default_factory=lambda: [3, 7, 11], description="Kernel size per residual block"
    )
    residual_block_dilations: list[list[int]] = Field(
        default_factory=lambda: [[1, 3, 5], [1, 3, 5], [1, 3, 5]],
        description="Dilations per residual block",
    )

    @model_validator(mode="after")
    def validate_blocks(self) -> "GeneratorConfig":
        if any(r < 1 for r in self.upsample_ratios):
            raise ValueError("upsample_ratios must be positive")
        if any(k % 2 == 0 for k in self.residual_block_kernel_sizes):
            raise ValueError("residual_block_kernel_sizes must be odd")
        if len(self.residual_block_dilations) != len(self.residual_block_kernel_sizes):
            raise ValueError("one dilation list per residual block kernel is required")
        return self

    @property
    def samples_per_frame(self) -> int:
        return math.prod(self.upsample_ratios)


class DiscriminatorConfig(Section):
    """Scale and period discriminator families."""

    scale_factors: list[int] = Field(
        default_factory=lambda: [1, 2, 4], description="Waveform downsample factor per scale disc"
    )
    periods: list[int] = Field(
        default_factory=lambda: [2, 3, 5, 7, 11], description="Period per period disc"
    )
    channels: list[int] = Field(
        default_factory=lambda: [32, 128, 512], description="Conv stack widths"
    )
    kernel_size: int = Field(default=5, ge=1, description="Conv kernel size")
    stride: int = Field(default=3, ge=1, description="Conv stride of the stack")

    @field_validator("scale_factors")
    @classmethod
    def validate_powers_of_two(cls, factors: list[int]) -> list[int]:
        for factor in factors:
            if factor < 1 or factor & (factor - 1):
                raise ValueError(f"scale factor {factor} is not a power of two")
        return factors

    @field_validator("periods")
    @classmethod
    def validate_periods(cls, periods: list[int]) -> list[int]:
        if any(p < 1 for p in periods):
            raise ValueError("periods must be positive")
        return periods


class UnitVocoderConfig(Section):
    """Token embedding front end of the unit vocoder."""

    embed_dim: int = Field(default=512, ge=1, description="Embedding width per stream")
    warm_start: bool = Field(
        default=True,
        description="Initialize the generator from the resynthesis checkpoint when widths match",
    )


class LossConfig(Section):
    """Generator loss weights."""

    lambda_mel: float = Field(default=45.0, ge=0, description="Mel loss weight")
    lambda_fm: float = Field(default=2.0, ge=0, description="Feature matching loss weight")


class OptimizerConfig(Section):
    """Adam settings."""

    lr: float = Field(default=2e-4, ge=0, description="Learning rate")
    betas: tuple[float, float] = Field(default=(0.8, 0.99), description="Adam betas")
    eps: float = Field(default=1e-8, gt=0, description="Adam epsilon")
    discriminator_lr: Optional[float] = Field(
        default=None, ge=0, description="Discriminator learning rate; lr when unset"
    )
    lr_decay: float = Field(
        default=1.0, gt=0, le=1, description="Per-step exponential learning-rate decay"
    )

    def learning_rate(self, step: int, discriminator: bool = False) -> float:
        """Rate after ``step`` updates: ``base * lr_decay ** step``."""
        base = self.lr
        if discriminator and self.discriminator_lr is not None:
            base = self.discriminator_lr
        return base * self.lr_decay**step


class TrainingConfig(Section):
    """Resynthesis training loop."""

    steps: int = Field(default=250000, ge=0, description="Optimizer steps")
    batch_size: int = Field(default=16, ge=1, description="Segments per step")
    segment_frames: int = Field(default=32, ge=1, description="Finest frames per segment")
    checkpoint_interval: int = Field(default=5000, ge=1, description="Steps between checkpoints")
    log_interval: int = Field(default=100, ge=1, description="Steps between loss log lines")
    discriminator_start_step: int = Field(
        default=0, ge=0, description="Step at which adversarial terms switch on"
    )


class QuantizerConfig(Section):
    """K-means codebooks."""

    k: int = Field(default=1024, ge=1, description="Clusters per resolution")
    max_iters: int = Field(default=100, ge=1, description="Lloyd iteration cap")
    tol: float = Field(default=1e-6, ge=0, description="Relative distortion improvement to stop")
    chunk_size: int = Field(default=4096, ge=1, description="Frames per assignment chunk")


class MetricsConfig(Section):
    """Pitch tracker and MCD settings."""

    frame_ms: float = Field(default=10.0, gt=0, description="Pitch tracker hop in ms")
    window_ms: float = Field(default=40.0, gt=0, description="Pitch tracker window in ms")
    f0_min: float = Field(default=50.0, gt=0, description="Lowest tracked F0 in Hz")
    f0_max: float = Field(default=1100.0, gt=0, description="Highest tracked F0 in Hz")
    clarity_threshold: float = Field(default=0.45, description="Voicing clarity threshold")
    silence_db: float = Field(default=-60.0, description="Frame energy floor in dBFS")
    mcd_order: int = Field(default=13, ge=1, description="Mel-cepstral coefficients (c0 excluded)")
    require_separation: bool = Field(
        default=False,
        description="Fail end-to-end when an utterance is not closer to its reference than silence is",
    )


class SyntheticConfig(Section):
    """Built-in vocal-like corpus generator."""

    clips: int = Field(default=300, ge=1, description="Clips to generate")
    seconds: float = Field(default=2.0, gt=0, description="Clip duration")
    f0_min: float = Field(default=180.0, gt=0, description="Lowest note in Hz")
    f0_max: float = Field(default=520.0, gt=0, description="Highest note in Hz")
    notes_per_clip: int = Field(default=4, ge=1, description="Notes per clip")
    vibrato_hz: float = Field(default=5.5, ge=0, description="Vibrato rate")
    vibrato_cents: float = Field(default=30.0, ge=0, description="Vibrato depth")
    harmonics: int = Field(default=8, ge=1, description="Partials per note (below Nyquist)")
    rest_fraction: float = Field(default=0.1, ge=0, lt=1, description="Silent share between notes")
    noise_db: float = Field(default=-50.0, description="Background noise level in dBFS")
    valid_count: int = Field(default=200, ge=0, description="Leading entries assigned to valid")
    test_count: int = Field(default=50, ge=0, description="Following entries assigned to test")

    @model_validator(mode="after")
    def validate_range(self) -> "SyntheticConfig":
        if 12.0 * math.log2(self.f0_max / self.f0_min) < 1.0:
            raise ValueError("synthetic f0 range must span at least one semitone")
        return self


class AblationConfig(Section):
    """Resolution-ladder comparison."""

    ladders: list[list[float]] = Field(
        default_factory=lambda: [[20.0], [20.0, 40.0], [20.0, 40.0, 80.0]],
        description="Ladders compared, one row each",
    )
    baselines: list[str] = Field(
        default_factory=list,
        description="Extra token sources: layer:<i>, layers:<i>+<j>+..., sum",
    )
    train: bool = Field(default=True, description="Train missing artifacts per row")

    @field_validator("ladders")
    @classmethod
    def validate_ladders(cls, ladders: list[list[float]]) -> list[list[float]]:
        for ladder in ladders:
            ResolutionLadder(tuple(ladder))
        return ladders


class ProcessingConfig(Section):
    """Parallelism and progress display."""

    max_workers: int = Field(default=4, ge=1, description="Worker threads for per-item stages")
    show_progress: bool = Field(default=True, description="Show progress bars")


class LoggingConfig(Section):
    """Logging configuration."""

    level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO", description="Logging level"
    )
    file: str = Field(default="./logs/singomd.log", description="Log file path")
    error_file: str = Field(default="./logs/errors.log", description="Error log file path")
    max_bytes: int = Field(default=10485760, description="Max log file size (10MB)")
    backup_count: int = Field(default=5, description="Number of backup log files")


class PathsConfig(Section):
    """Inputs and outputs."""

    manifest: str = Field(default="./data/manifest.jsonl", description="JSON Lines manifest")
    out_dir: str = Field(default="./runs/default", description="Run output directory")

    @property
    def out_path(self) -> Path:
        return Path(self.out_dir)


class RunConfig(Section):
    """Main configuration."""

    seed: int = Field(default=0, description="Seed for every stochastic stage")
    audio: AudioConfig = Field(default_factory=AudioConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    ssl: SSLConfig = Field(default_factory=SSLConfig)
    resampler: ResamplerConfig = Field(default_factory=ResamplerConfig)
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = Field(default_factory=DiscriminatorConfig)
    unit_vocoder: UnitVocoderConfig = Field(default_factory=UnitVocoderConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    quantizer: QuantizerConfig = Field(default_factory=QuantizerConfig)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig)
    ablation: AblationConfig = Field(default_factory=AblationConfig)
    processing: ProcessingConfig = Field(default_factory=ProcessingConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    @model_validator(mode="after")
    def validate_geometry(self) -> "RunConfig":
        """Cross-section checks on frame and sample geometry."""
        hop = self.audio.sample_rate * self.audio.frame_ms / 1000.0
        if abs(hop - round(hop)) > 1e-9:
            raise ValueError(
                f"sample_rate {self.audio.sample_rate} x frame_ms {self.audio.frame_ms} "
                "does not give an integer hop"
            )
        if not math.isclose(self.resampler.ladder[0], self.audio.frame_ms):
            raise ValueError(
                f"ladder starts at {self.resampler.ladder[0]} ms but frame_ms is "
                f"{self.audio.frame_ms}"
            )
        for ladder in self.ablation.ladders:
            if not math.isclose(ladder[0], self.audio.frame_ms):
                raise ValueError(f"ablation ladder {ladder} does not start at frame_ms")
        if self.generator.samples_per_frame != int(round(hop)):
            raise ValueError(
                f"product of upsample_ratios {self.generator.samples_per_frame} != hop {int(round(hop))}"
            )
        if self.metrics.f0_min >= self.metrics.f0_max:
            raise ValueError("metrics.f0_min must be below metrics.f0_max")
        return self

    @property
    def hop_length(self) -> int:
        return self.audio.hop_length


def _substitute_env(value: Any) -> Any:
    """Replace ``${VAR}`` strings with environment values, recursively."""
    if isinstance(value, dict):
        return {k: _substitute_env(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_substitute_env(v) for v in value]
    if isinstance(value, str) and value.startswith("${") and value.endswith("}"):
        return os.getenv(value[2:-1], "")
    return value


def apply_overrides(data: dict, overrides: Optional[dict[str, Any]]) -> dict:
    """Set dotted keys (``quantizer.k``) in a raw config mapping.

    ``None`` values are ignored so unset CLI flags leave the file's values alone.
    """
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        node = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"Cannot override {dotted}: {key} is not a section")
        node[leaf] = value
    return data


def load_config(
    config_path: Optional[str] = "config/config.yaml",
    overrides: Optional[dict[str, Any]] = None,
) -> RunConfig:
    """Load configuration from a YAML or JSON file and environment variables.

    Args:
        config_path: Path to the configuration file; None uses built-in defaults
        overrides: Dotted-key values applied on top of the file (CLI flags)

    Returns:
        Loaded and validated configuration

    Raises:
        ConfigError: If the file is missing, unparsable or invalid
    """
    # Load environment variables from .env file
    load_dotenv()

    config_data: dict = {}
    if config_path is not None:
        config_file = Path(config_path)
        if not config_file.exists():
            raise ConfigError(f"Configuration file not found: {config_path}")
        try:
            with open(config_file, "r", encoding="utf-8") as f:
                config_data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse {config_path}: {e}") from e
        if not isinstance(config_data, dict):
            raise ConfigError(f"{config_path} must contain a mapping at the top level")

    config_data = apply_overrides(_substitute_env(config_data), overrides)

    try:
        return RunConfig(**config_data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def save_resolved_config(config: RunConfig, out_dir: Path) -> Path:
    """Archive the fully resolved config next to the run outputs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "resolved_config.yaml"
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config.model_dump(mode="json"), f, sort_keys=False)
    return path
