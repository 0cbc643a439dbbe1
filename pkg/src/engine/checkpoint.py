"""SOMDCKPT checkpoint files.

Layout (little-endian): magic ``SOMDCKPT``, version u32, entry count u32, then per
entry: name length u32, UTF-8 name, rank u32, dims u32[rank], float32 payload.
"""

import os
import struct
import tempfile
from pathlib import Path
from typing import Mapping

import numpy as np

from src.core.errors import CheckpointFormatError
from src.core.logger import get_logger

logger = get_logger(__name__)

MAGIC = b"SOMDCKPT"
VERSION = 1


def save_checkpoint(path: Path, entries: Mapping[str, np.ndarray]) -> Path:
    """Write named arrays as float32 to ``path`` atomically.

    Args:
        path: Destination file
        entries: Name -> array mapping; order is preserved

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chunks = [MAGIC, struct.pack("<II", VERSION, len(entries))]
    for name, value in entries.items():
        array = np.ascontiguousarray(value, dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack(f"<I{array.ndim}I", array.ndim, *array.shape))
        chunks.append(array.tobytes())

    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(b"".join(chunks))
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.debug(f"Wrote checkpoint {path} ({len(entries)} entries)")
    return path


def load_checkpoint(path: Path) -> dict[str, np.ndarray]:
    """Read a checkpoint written by ``save_checkpoint``.

    Raises:
        CheckpointFormatError: On bad magic, unsupported version or truncated data
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise CheckpointFormatError(f"Cannot read checkpoint {path}: {e}") from e

    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic, not a SOMDCKPT checkpoint")
    reader = _Reader(raw, len(MAGIC), path)
    version, count = reader.unpack("<II")
    if version != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported checkpoint version {version}")

    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<I")
        try:
            name = reader.take(name_len).decode("utf-8")
        except UnicodeDecodeError as e:
            offset = reader.offset - name_len
            raise CheckpointFormatError(f"{path}: entry name at byte {offset} is not UTF-8") from e
        (rank,) = reader.unpack("<I")
        dims = reader.unpack(f"<{rank}I") if rank else ()
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        payload = reader.take(4 * size)
        entries[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)
    if reader.offset != len(raw):
        raise CheckpointFormatError(f"{path}: {len(raw) - reader.offset} bytes of trailing data")
    return entries


class _Reader:
    def __init__(self, raw: bytes, offset: int, path: Path):
        self.raw = raw
        self.offset = offset
        self.path = path

    def take(self, count: int) -> bytes:
        end = self.offset + count
        if end > len(self.raw):
            raise CheckpointFormatError(f"{self.path}: truncated payload")
        chunk = self.raw[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))
