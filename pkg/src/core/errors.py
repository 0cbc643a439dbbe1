"""Exception hierarchy for the SingOMD pipeline.

Every pipeline error carries the process exit code the CLI reports for it:
1 for usage/config problems, 2 for data problems, 3 for numeric failures.
"""

from typing import Optional


class SingOMDError(Exception):
    """Base class for all pipeline errors."""

    exit_code: int = 1


class ConfigError(SingOMDError):
    """Invalid or inconsistent run configuration."""

    exit_code = 1


class DataError(SingOMDError):
    """Unreadable, malformed or missing input data."""

    exit_code = 2


class FeatureDumpError(DataError):
    """Malformed SOMDFEAT feature dump."""


class CheckpointFormatError(DataError):
    """Malformed SOMDCKPT checkpoint."""


class CodebookFormatError(DataError):
    """Malformed SOMDCDBK codebook file."""


class StaleArtifactError(DataError):
    """An upstream artifact changed since the stage that produced it recorded its checksum."""

    def __init__(self, artifact: str, expected: Optional[str], actual: Optional[str]):
        self.artifact = artifact
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"Stale artifact {artifact}: recorded checksum {_short(expected)}, "
            f"found {_short(actual)}. Re-run the producing stage."
        )


class NumericError(SingOMDError):
    """Non-finite values or a violated numeric invariant."""

    exit_code = 3


class ShapeError(ValueError):
    """Array shapes that do not fit an operation. The message names the dimension."""


class LadderError(ValueError):
    """Invalid resolution ladder. The message names the offending pair."""


class InvariantViolation(RuntimeError):
    """Internal length bookkeeping broke at a given level."""

    def __init__(self, level: int, message: str):
        self.level = level
        super().__init__(f"level {level}: {message}")


def _short(checksum: Optional[str]) -> str:
    return "<none>" if checksum is None else checksum[:12]
