"""Multi-stream token sequences and their JSON files."""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from src.core.errors import DataError
from src.quantizer.codebook import Codebook, tokenize
from src.resampler.ladder import ResolutionLadder, stream_lengths, tokens_per_second
from src.resampler.module import MultiResFeatures


@dataclass
class TokenStreams:
    """One id sequence per stream, finest first.

    ``resolutions_ms`` holds one resolution per stream. For resampler output it is the
    ladder itself; same-resolution baselines repeat the finest resolution.
    """

    ladder_ms: list[float]
    streams: list[np.ndarray]
    codebooks: list[str]
    utt_id: str = ""
    resolutions_ms: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.ladder_ms = [float(r) for r in self.ladder_ms]
        self.streams = [np.asarray(s, dtype=np.int64) for s in self.streams]
        if not self.resolutions_ms:
            self.resolutions_ms = list(self.ladder_ms)
        self.resolutions_ms = [float(r) for r in self.resolutions_ms]
        if len(self.resolutions_ms) != len(self.streams):
            raise DataError(
                f"{len(self.streams)} streams but {len(self.resolutions_ms)} resolutions"
            )
        if len(self.codebooks) != len(self.streams):
            raise DataError(f"{len(self.streams)} streams but {len(self.codebooks)} codebook hashes")
        finest = self.resolutions_ms[0]
        for r in self.resolutions_ms:
            ratio = r / finest
            if r < finest or not math.isclose(ratio, round(ratio)):
                raise DataError(f"stream resolution {r:g} ms is not a multiple of {finest:g} ms")

    @property
    def ratios(self) -> list[int]:
        """Each stream's frame duration over the finest one."""
        finest = self.resolutions_ms[0]
        return [int(round(r / finest)) for r in self.resolutions_ms]

    @property
    def lengths(self) -> list[int]:
        return [len(s) for s in self.streams]

    @property
    def total_tokens(self) -> int:
        return sum(self.lengths)

    @property
    def frames(self) -> int:
        """Finest-resolution length."""
        return len(self.streams[0])

    def tokens_per_second(self) -> float:
        return tokens_per_second(self.resolutions_ms)

    def crop(self, start: int, frames: int) -> "TokenStreams":
        """Finest frames ``[start, start + frames)`` with each stream cut to match.

        ``start`` must be a multiple of every stream ratio.
        """
        cropped = []
        for stream, ratio in zip(self.streams, self.ratios):
            if start % ratio:
                raise ValueError(f"crop start {start} is not aligned to ratio {ratio}")
            first = start // ratio
            cropped.append(stream[first : first + -(-frames // ratio)])
        return TokenStreams(
            self.ladder_ms, cropped, list(self.codebooks), self.utt_id, list(self.resolutions_ms)
        )

    def to_json(self) -> dict:
        data = {
            "ladder_ms": self.ladder_ms,
            "streams": [s.tolist() for s in self.streams],
            "codebooks": list(self.codebooks),
            "utt_id": self.utt_id,
        }
        if self.resolutions_ms != self.ladder_ms:
            data["resolutions_ms"] = self.resolutions_ms
        return data

    @classmethod
    def from_json(cls, data: dict) -> "TokenStreams":
        try:
            return cls(
                ladder_ms=data["ladder_ms"],
                streams=data["streams"],
                codebooks=data["codebooks"],
                utt_id=data.get("utt_id", ""),
                resolutions_ms=data.get("resolutions_ms", []),
            )
        except KeyError as e:
            raise DataError(f"token file is missing key {e}") from e


def save_tokens(path: Path, tokens: TokenStreams) -> Path:
    """Write tokens as compact, key-ordered JSON (byte-identical for identical tokens)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(tokens.to_json(), separators=(",", ":")) + "\n", encoding="utf-8")
    return path


def load_tokens(path: Path) -> TokenStreams:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"Cannot read token file {path}: {e}") from e
    return TokenStreams.from_json(data)


def tokenize_multi(
    mrf: MultiResFeatures,
    books: Sequence[Optional[Codebook]],
    utt_id: str = "",
    chunk_size: int = 4096,
) -> TokenStreams:
    """Tokenize every up-path level with its own codebook.

    Raises:
        DataError: If a level has no codebook or the codebook was fit for another resolution
    """
    ladder: ResolutionLadder = mrf.ladder
    if len(books) != len(ladder):
        raise DataError(f"ladder {ladder} has {len(ladder)} levels but {len(books)} codebooks")
    streams = []
    for level, (resolution, book) in enumerate(zip(ladder, books)):
        if book is None:
            raise DataError(f"missing codebook for level {level} ({resolution:g} ms)")
        if not math.isclose(book.resolution_ms, resolution):
            raise DataError(
                f"codebook for level {level} was fit at {book.resolution_ms:g} ms, "
                f"not {resolution:g} ms"
            )
        streams.append(tokenize(mrf.up_path[level], book, chunk_size))
    expected = stream_lengths(len(streams[0]), ladder.cumulative_ratios())
    if [len(s) for s in streams] != expected:
        raise DataError(f"stream lengths {[len(s) for s in streams]} do not follow {expected}")
    return TokenStreams(
        list(ladder.resolutions_ms), streams, [b.content_hash for b in books], utt_id
    )
