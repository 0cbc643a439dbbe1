"""Resolution ladders and the stage ratios derived from them."""

import math
from dataclasses import dataclass

from src.core.errors import LadderError


@dataclass(frozen=True)
class ResolutionLadder:
    """Frame durations in ms, finest first, each an integer multiple of the previous one."""

    resolutions_ms: tuple[float, ...]

    def __post_init__(self):
        resolutions = tuple(float(r) for r in self.resolutions_ms)
        object.__setattr__(self, "resolutions_ms", resolutions)
        if not resolutions:
            raise LadderError("ladder must contain at least one resolution")
        if resolutions[0] <= 0:
            raise LadderError(f"resolution {resolutions[0]} ms must be positive")
        for finer, coarser in zip(resolutions, resolutions[1:]):
            if coarser <= finer:
                raise LadderError(f"ladder not strictly increasing at ({finer:g}, {coarser:g})")
            quotient = coarser / finer
            if not math.isclose(quotient, round(quotient), rel_tol=0, abs_tol=1e-9):
                raise LadderError(
                    f"({finer:g}, {coarser:g}) has non-integer ratio {quotient:g}"
                )

    @classmethod
    def parse(cls, text: str) -> "ResolutionLadder":
        """Parse a comma-separated ms list such as ``"20,40,80"``."""
        try:
            values = tuple(float(part) for part in text.split(",") if part.strip())
        except ValueError as e:
            raise LadderError(f"cannot parse ladder {text!r}: {e}") from e
        return cls(values)

    def __len__(self) -> int:
        return len(self.resolutions_ms)

    def __iter__(self):
        return iter(self.resolutions_ms)

    @property
    def stages(self) -> int:
        """Number of down (and up) stages."""
        return len(self.resolutions_ms) - 1

    @property
    def finest_ms(self) -> float:
        return self.resolutions_ms[0]

    def cumulative_ratios(self) -> list[int]:
        """Ratio of each level's frame duration to the finest one (1 for level 0)."""
        return [int(round(r / self.finest_ms)) for r in self.resolutions_ms]

    def index_of(self, resolution_ms: float) -> int:
        for i, r in enumerate(self.resolutions_ms):
            if math.isclose(r, resolution_ms):
                return i
        raise LadderError(f"resolution {resolution_ms:g} ms is not on ladder {self}")

    def label(self) -> str:
        return ",".join(f"{r:g}" for r in self.resolutions_ms)

    def __str__(self) -> str:
        return f"({self.label()})"


def derive_ratios(ladder: ResolutionLadder) -> tuple[list[int], list[int]]:
    """Down ratios finest to coarsest and the mirrored up ratios."""
    down = [
        int(round(coarser / finer))
        for finer, coarser in zip(ladder.resolutions_ms, ladder.resolutions_ms[1:])
    ]
    return down, list(reversed(down))


def stream_lengths(frames: int, ratios: list[int]) -> list[int]:
    """Frames per level for a finest length and cumulative ratios: ``ceil(T / ratio)``."""
    return [-(-frames // r) for r in ratios]


def tokens_per_second(resolutions_ms) -> float:
    """Token rate of a multi-stream representation: sum of 1000 / resolution."""
    return sum(1000.0 / r for r in resolutions_ms)
