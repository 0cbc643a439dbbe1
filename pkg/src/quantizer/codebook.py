"""Per-resolution codebooks, tokenize/detokenize and the SOMDCDBK file format.

Codebook file (little-endian): magic ``SOMDCDBK``, version u32, resolution_ms f32,
k and D as u32, float32 centroids row-major, then a CRC32 of everything before it.
"""

import os
import struct
import tempfile
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from src.core.errors import CodebookFormatError, DataError, ShapeError
from src.engine.tensor import Tensor
from src.quantizer.kmeans import nearest_centroids
from src.utils.checksum import array_checksum

MAGIC = b"SOMDCDBK"
VERSION = 1
HEADER = struct.Struct("<8sIf2I")
TRAILER = struct.Struct("<I")


@dataclass
class Codebook:
    """``k x D`` float32 centroids for one resolution."""

    centroids: np.ndarray
    resolution_ms: float
    content_hash: str = field(init=False)

    def __post_init__(self):
        self.centroids = np.ascontiguousarray(self.centroids, dtype=np.float32)
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 1:
            raise ShapeError(f"centroids must be k x D with k >= 1, got {self.centroids.shape}")
        if not np.all(np.isfinite(self.centroids)):
            raise DataError("codebook centroids must be finite")
        self.content_hash = array_checksum(self.centroids)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dims(self) -> int:
        return self.centroids.shape[1]


FeatureInput = Union[Tensor, np.ndarray]


def _frames_of(features: FeatureInput) -> np.ndarray:
    """``D x T`` features as ``T x D`` float64 frames."""
    data = features.data if isinstance(features, Tensor) else np.asarray(features)
    return np.asarray(data, dtype=np.float64).T


def tokenize(features: FeatureInput, codebook: Codebook, chunk_size: int = 4096) -> np.ndarray:
    """Nearest-centroid id per frame of a ``D x T`` sequence; ties go to the lowest id.

    Raises:
        ShapeError: If the feature width differs from the codebook dims
    """
    frames = _frames_of(features)
    if frames.shape[1] != codebook.dims:
        raise ShapeError(
            f"features have {frames.shape[1]} channels, codebook has {codebook.dims} dims"
        )
    ids, _ = nearest_centroids(frames, codebook.centroids, chunk_size)
    return ids


def detokenize(ids: np.ndarray, codebook: Codebook) -> np.ndarray:
    """``D x T`` sequence of the centroids named by ``ids``.

    Raises:
        DataError: If an id is outside ``[0, k)``; the message names its position
    """
    ids = np.asarray(ids, dtype=np.int64)
    bad = np.flatnonzero((ids < 0) | (ids >= codebook.k))
    if bad.size:
        position = int(bad[0])
        raise DataError(f"token id {int(ids[position])} at position {position} is outside [0, {codebook.k})")
    return np.ascontiguousarray(codebook.centroids[ids].T)


def save_codebook(path: Path, codebook: Codebook) -> Path:
    """Write ``codebook`` atomically with a CRC32 trailer."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = HEADER.pack(MAGIC, VERSION, codebook.resolution_ms, codebook.k, codebook.dims)
    body += np.ascontiguousarray(codebook.centroids, dtype="<f4").tobytes()
    body += TRAILER.pack(zlib.crc32(body))
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(body)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def load_codebook(path: Path) -> Codebook:
    """Read a codebook file.

    Raises:
        CodebookFormatError: On bad magic, version, size or CRC mismatch
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise CodebookFormatError(f"Cannot read codebook {path}: {e}") from e
    if raw[: len(MAGIC)] != MAGIC:
        raise CodebookFormatError(f"{path}: bad magic, not a SOMDCDBK codebook")
    if len(raw) < HEADER.size + TRAILER.size:
        raise CodebookFormatError(f"{path}: truncated header")
    _, version, resolution_ms, k, dims = HEADER.unpack_from(raw)
    if version != VERSION:
        raise CodebookFormatError(f"{path}: unsupported codebook version {version}")
    expected = HEADER.size + 4 * k * dims + TRAILER.size
    if len(raw) != expected:
        raise CodebookFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    (crc,) = TRAILER.unpack_from(raw, len(raw) - TRAILER.size)
    if crc != zlib.crc32(raw[: -TRAILER.size]):
        raise CodebookFormatError(f"{path}: CRC32 mismatch")
    centroids = np.frombuffer(raw, dtype="<f4", count=k * dims, offset=HEADER.size)
    return Codebook(centroids.reshape(k, dims), float(resolution_ms))
