"""SOMDFEAT feature dumps.

Layout (little-endian): magic ``SOMDFEAT``, version u32, frame_ms f32, L, T, D as
u32, then the float32 payload ordered layer-major, frame-major, dim-minor.
"""

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from src.core.errors import FeatureDumpError
from src.features.ssl import LayerStack

MAGIC = b"SOMDFEAT"
VERSION = 1
HEADER = struct.Struct("<8sIf3I")
# Payload cap (elements) guarding against headers that overflow on read.
MAX_ELEMENTS = 1 << 34


def save_feature_dump(path: Path, stack: LayerStack) -> Path:
    """Write ``stack`` atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = HEADER.pack(MAGIC, VERSION, stack.frame_ms, stack.layers, stack.frames, stack.dims)
    payload = np.ascontiguousarray(stack.data, dtype="<f4").tobytes()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(header)
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def load_feature_dump(path: Path) -> LayerStack:
    """Read a feature dump written by ``save_feature_dump`` or an external extractor.

    Raises:
        FeatureDumpError: On bad magic, unsupported version, dimension overflow,
            truncated payload or trailing data
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise FeatureDumpError(f"Cannot read feature dump {path}: {e}") from e

    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise FeatureDumpError(f"{path}: bad magic, not a SOMDFEAT dump")
    if len(raw) < HEADER.size:
        raise FeatureDumpError(f"{path}: truncated header")
    _, version, frame_ms, layers, frames, dims = HEADER.unpack_from(raw)
    if version != VERSION:
        raise FeatureDumpError(f"{path}: unsupported dump version {version}")

    elements = layers * frames * dims
    if elements > MAX_ELEMENTS:
        raise FeatureDumpError(
            f"{path}: dimension overflow, header declares {layers} x {frames} x {dims}"
        )
    expected = HEADER.size + 4 * elements
    if len(raw) < expected:
        raise FeatureDumpError(
            f"{path}: truncated payload, {len(raw) - HEADER.size} of {4 * elements} bytes"
        )
    if len(raw) > expected:
        raise FeatureDumpError(f"{path}: {len(raw) - expected} bytes of trailing data")

    data = np.frombuffer(raw, dtype="<f4", count=elements, offset=HEADER.size)
    return LayerStack(data.reshape(layers, frames, dims).astype(np.float32), float(frame_ms))
