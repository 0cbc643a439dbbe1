"""Checksum utilities for detecting changed inputs and stale artifacts."""

import hashlib
from pathlib import Path
from typing import Optional

import numpy as np


def file_checksum(filepath: Path) -> str:
    """Calculate SHA-256 checksum of a file.

    Args:
        filepath: Path to file

    Returns:
        Hex digest of SHA-256 checksum

    Raises:
        FileNotFoundError: If file doesn't exist
        IOError: If file can't be read
    """
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"File not found: {filepath}")

    sha256 = hashlib.sha256()

    # Read file in chunks to handle large files efficiently
    with open(filepath, "rb") as f:
        while chunk := f.read(65536):
            sha256.update(chunk)

    return sha256.hexdigest()


def array_checksum(array: np.ndarray) -> str:
    """SHA-256 over an array's dtype, shape and little-endian contents."""
    array = np.ascontiguousarray(array)
    le = array.astype(array.dtype.newbyteorder("<"), copy=False)
    sha256 = hashlib.sha256()
    sha256.update(le.dtype.str.encode("ascii"))
    sha256.update(repr(tuple(le.shape)).encode("ascii"))
    sha256.update(le.tobytes())
    return sha256.hexdigest()


def has_file_changed(filepath: Path, stored_checksum: Optional[str]) -> bool:
    """Check if file has changed since its checksum was stored.

    Args:
        filepath: Path to file
        stored_checksum: Previously stored checksum (None if never checksummed)

    Returns:
        True if the file changed, is missing, or has no stored checksum
    """
    if stored_checksum is None:
        return True

    filepath = Path(filepath)
    if not filepath.exists():
        return True

    try:
        return file_checksum(filepath) != stored_checksum
    except (FileNotFoundError, IOError):
        return True
