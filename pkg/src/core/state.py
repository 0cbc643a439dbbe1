"""Pipeline state: completed stages, artifact checksums and per-utterance feature records."""

import json
import shutil
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field

from src.core.errors import StaleArtifactError
from src.core.logger import get_logger
from src.utils.checksum import file_checksum

logger = get_logger(__name__)


def _now() -> datetime:
    return datetime.now(timezone.utc)


class FeatureRecord(BaseModel):
    """Checksums behind one extracted feature dump."""

    wav_checksum: str = Field(..., description="SHA-256 of the source WAV")
    dump_checksum: str = Field(..., description="SHA-256 of the SOMDFEAT dump")
    frames: int = Field(default=0, description="Frames in the dump")


class StageRecord(BaseModel):
    """One completed pipeline stage."""

    completed_at: datetime = Field(default_factory=_now, description="Completion time")
    inputs: Dict[str, str] = Field(
        default_factory=dict, description="Upstream artifact path (relative to out dir) -> checksum"
    )
    outputs: Dict[str, str] = Field(
        default_factory=dict, description="Produced artifact path (relative to out dir) -> checksum"
    )
    params: Dict[str, Any] = Field(default_factory=dict, description="Stage parameters")


class PipelineState(BaseModel):
    """Run state stored as ``state.json`` in the output directory."""

    version: str = Field(default="1.0", description="State schema version")
    last_updated: datetime = Field(default_factory=_now, description="Last state update time")
    stages: Dict[str, StageRecord] = Field(default_factory=dict, description="Completed stages")
    features: Dict[str, FeatureRecord] = Field(
        default_factory=dict, description="Extracted features per utterance"
    )


class StateManager:
    """Thread-safe state manager for reading and writing the state file."""

    def __init__(self, out_dir: Path):
        """Initialize state manager.

        Args:
            out_dir: Run output directory; artifact paths are recorded relative to it
        """
        self.out_dir = Path(out_dir)
        self.state_file = self.out_dir / "state.json"
        self._lock = threading.RLock()
        self._state: Optional[PipelineState] = None

    def load(self) -> PipelineState:
        """Load state from file or create a new one if the file doesn't exist.

        Returns:
            Loaded or new state object
        """
        with self._lock:
            if not self.state_file.exists():
                self._state = PipelineState()
                return self._state

            try:
                with open(self.state_file, "r", encoding="utf-8") as f:
                    data = json.load(f)
                self._state = PipelineState(**data)
            except (json.JSONDecodeError, ValueError) as e:
                # If state file is corrupted, move it aside and start fresh
                backup_file = self.state_file.with_suffix(".json.corrupt")
                self.state_file.replace(backup_file)
                logger.warning(f"State file corrupted ({e}); moved to {backup_file}")
                self._state = PipelineState()
                self._write_state()

            return self._state

    def save(self) -> None:
        """Save state to file atomically."""
        with self._lock:
            self.state.last_updated = _now()
            self._write_state()

    def _write_state(self) -> None:
        """Write state to file atomically using a temporary file."""
        self.out_dir.mkdir(parents=True, exist_ok=True)

        # Create backup before writing
        if self.state_file.exists():
            shutil.copy2(self.state_file, self.state_file.with_suffix(".json.bak"))

        temp_file = self.state_file.with_suffix(".tmp")
        with open(temp_file, "w", encoding="utf-8") as f:
            json.dump(self._state.model_dump(mode="json"), f, indent=2, ensure_ascii=False)

        # Atomic rename
        temp_file.replace(self.state_file)

    @property
    def state(self) -> PipelineState:
        """Get current state, loading if necessary."""
        if self._state is None:
            self.load()
        return self._state

    def relative(self, path: Path) -> str:
        path = Path(path).resolve()
        try:
            return path.relative_to(self.out_dir.resolve()).as_posix()
        except ValueError:
            return str(path)

    def checksums(self, paths) -> Dict[str, str]:
        """Relative path -> checksum for existing files."""
        return {self.relative(p): file_checksum(Path(p)) for p in sorted(paths, key=str)}

    def get_stage(self, name: str) -> Optional[StageRecord]:
        return self.state.stages.get(name)

    def record_stage(
        self,
        name: str,
        outputs,
        inputs=(),
        params: Optional[Dict[str, Any]] = None,
    ) -> StageRecord:
        """Record a completed stage with checksums of its inputs and outputs.

        Args:
            name: Stage key, e.g. ``fit-codebooks`` or ``ablation/20,40/tokenize``
            outputs: Paths the stage produced
            inputs: Upstream paths the stage consumed
            params: Stage parameters worth keeping (ladder, k, steps)

        Returns:
            The stored record
        """
        with self._lock:
            record = StageRecord(
                inputs=self.checksums(inputs),
                outputs=self.checksums(outputs),
                params=params or {},
            )
            self.state.stages[name] = record
            self.save()
        logger.debug(f"Recorded stage {name}: {len(record.outputs)} outputs")
        return record

    def verify_stage(self, name: str, paths=None, check_inputs: bool = False) -> StageRecord:
        """Check that a stage's outputs on disk still match their recorded checksums.

        Args:
            name: Producing stage
            paths: Only check these outputs (default: all recorded outputs)
            check_inputs: Also require the stage's inputs to be unchanged since it ran

        Returns:
            The stage record

        Raises:
            StaleArtifactError: If the stage never completed, or an output (or, with
                ``check_inputs``, an input) is missing or changed
        """
        record = self.get_stage(name)
        if record is None:
            raise StaleArtifactError(f"<stage {name}>", None, None)
        wanted = record.outputs if paths is None else {self.relative(p): None for p in paths}
        for rel in wanted:
            self._compare(rel, record.outputs.get(rel))
        if check_inputs:
            for rel, expected in record.inputs.items():
                self._compare(rel, expected)
        return record

    def _compare(self, rel: str, expected: Optional[str]) -> None:
        path = self.out_dir / rel
        actual = file_checksum(path) if path.exists() else None
        if expected is None or actual != expected:
            raise StaleArtifactError(rel, expected, actual)

    def is_stage_current(self, name: str) -> bool:
        """Whether a stage's outputs and inputs are unchanged since it ran."""
        try:
            self.verify_stage(name, check_inputs=True)
            return True
        except StaleArtifactError:
            return False

    def get_feature(self, utt_id: str) -> Optional[FeatureRecord]:
        return self.state.features.get(utt_id)

    def record_feature(self, utt_id: str, wav_checksum: str, dump_checksum: str, frames: int) -> None:
        """Remember the checksums behind an extracted dump (saved with the next ``save``)."""
        with self._lock:
            self.state.features[utt_id] = FeatureRecord(
                wav_checksum=wav_checksum, dump_checksum=dump_checksum, frames=frames
            )
