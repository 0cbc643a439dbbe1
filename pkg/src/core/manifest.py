"""Dataset manifests: one JSON object per line with utt_id, wav_path and split."""

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.core.errors import DataError

Split = Literal["train", "valid", "test"]


class ManifestEntry(BaseModel):
    """One utterance."""

    model_config = ConfigDict(extra="forbid")

    utt_id: str = Field(..., min_length=1, description="Unique utterance id")
    wav_path: str = Field(..., description="WAV path, relative to the manifest or absolute")
    split: Split = Field(default="train", description="Data split")

    @field_validator("utt_id")
    @classmethod
    def validate_utt_id(cls, utt_id: str) -> str:
        if "/" in utt_id or "\\" in utt_id:
            raise ValueError(f"utt_id {utt_id!r} must not contain path separators")
        return utt_id


class Manifest(BaseModel):
    """Ordered manifest entries; ``root`` resolves relative WAV paths."""

    entries: list[ManifestEntry] = Field(default_factory=list)
    root: Path = Field(default=Path("."), description="Directory relative paths resolve against")

    @field_validator("entries")
    @classmethod
    def validate_unique(cls, entries: list[ManifestEntry]) -> list[ManifestEntry]:
        """Validate that utterance ids are unique (so splits cannot overlap)."""
        seen = set()
        for entry in entries:
            if entry.utt_id in seen:
                raise ValueError(f"duplicate utt_id {entry.utt_id!r}")
            seen.add(entry.utt_id)
        return entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def split(self, name: Optional[Split]) -> list[ManifestEntry]:
        """Entries of one split, in manifest order (all entries for None)."""
        if name is None:
            return list(self.entries)
        return [e for e in self.entries if e.split == name]

    def wav_path(self, entry: ManifestEntry) -> Path:
        path = Path(entry.wav_path)
        return path if path.is_absolute() else self.root / path

    def get(self, utt_id: str) -> ManifestEntry:
        for entry in self.entries:
            if entry.utt_id == utt_id:
                return entry
        raise KeyError(f"Unknown utterance: {utt_id}")


def assign_splits(count: int, valid_count: int, test_count: int) -> list[Split]:
    """First ``valid_count`` entries valid, the next ``test_count`` test, the rest train."""
    splits: list[Split] = []
    for i in range(count):
        if i < valid_count:
            splits.append("valid")
        elif i < valid_count + test_count:
            splits.append("test")
        else:
            splits.append("train")
    return splits


def load_manifest(path: Path) -> Manifest:
    """Read a JSON Lines manifest; blank lines are ignored.

    Raises:
        DataError: If the file is missing or a line is malformed
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Manifest not found: {path}")
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                entries.append(ManifestEntry(**json.loads(line)))
            except (json.JSONDecodeError, TypeError, ValidationError) as e:
                raise DataError(f"{path}:{line_no}: invalid manifest entry: {e}") from e
    try:
        return Manifest(entries=entries, root=path.parent)
    except ValidationError as e:
        raise DataError(f"{path}: {e}") from e


def save_manifest(path: Path, manifest: Manifest) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for entry in manifest.entries:
            f.write(json.dumps(entry.model_dump()) + "\n")
    return path
