"""Rank-4 video tensors and the LCT1 binary interchange format.

A video tensor is a plain :class:`numpy.ndarray` of shape ``(C, T, H, W)``
with dtype float32 or float64.  Nothing wraps it; :func:`as_video` only
validates.

LCT1 layout (all integers little-endian)::

    offset  size  field
    0       4     magic b"LCT1"
    4       1     dtype tag (0 = f32, 1 = f64)
    5       8     u64 element count C*T*H*W
    13      32    u64 dims C, T, H, W
    45      n     samples, row-major (W fastest), little-endian
"""

from __future__ import annotations

import os
import struct
from typing import Sequence

import numpy as np

MAGIC = b"LCT1"
HEADER = struct.Struct("<4sBQ4Q")
HEADER_SIZE = HEADER.size  # 45

DTYPE_TAGS = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
TAG_DTYPES = {tag: dt for dt, tag in DTYPE_TAGS.items()}


class TensorFormatError(ValueError):
    """Malformed LCT1 data.  ``field`` names the first violated field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def as_video(x, dtype=None) -> np.ndarray:
    """Validate ``x`` as a video tensor and return it as a C-contiguous array.

    Integer and other non-float inputs are converted to float32 unless
    ``dtype`` says otherwise.
    """
    arr = np.asarray(x)
    if dtype is not None:
        arr = arr.astype(dtype, copy=False)
    elif arr.dtype not in DTYPE_TAGS:
        arr = arr.astype(np.float32)
    if arr.ndim != 4:
        raise ValueError(f"video tensor must be rank 4 (C, T, H, W), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ValueError(f"every dimension must be >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("video tensor contains NaN or Inf")
    return np.ascontiguousarray(arr)


def dtype_tag(dtype) -> int:
    try:
        return DTYPE_TAGS[np.dtype(dtype)]
    except KeyError:
        raise ValueError(f"unsupported dtype {dtype!r}; use float32 or float64") from None


def to_bytes(t: np.ndarray) -> bytes:
    t = as_video(t)
    c, tt, h, w = t.shape
    header = HEADER.pack(MAGIC, dtype_tag(t.dtype), t.size, c, tt, h, w)
    return header + t.astype(t.dtype.newbyteorder("<"), copy=False).tobytes()


def from_bytes(buf: bytes) -> np.ndarray:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise TensorFormatError("magic", f"expected {MAGIC!r}, got {bytes(buf[:4])!r}")
    if len(buf) < HEADER_SIZE:
        raise TensorFormatError("header", f"need {HEADER_SIZE} bytes, got {len(buf)}")
    _, tag, count, *dims = HEADER.unpack_from(buf)
    if tag not in TAG_DTYPES:
        raise TensorFormatError("dtype", f"unknown dtype tag {tag}")
    if any(d < 1 for d in dims):
        raise TensorFormatError("dims", f"dimensions must be >= 1, got {tuple(dims)}")
    n = 1
    for d in dims:
        n *= d
    if n != count or n >= 2**62:
        raise TensorFormatError("dims", f"dims {tuple(dims)} overflow or disagree with element count {count}")
    dt = TAG_DTYPES[tag]
    need = HEADER_SIZE + n * dt.itemsize
    if len(buf) < need:
        raise TensorFormatError("truncated", f"payload needs {need} bytes, file has {len(buf)}")
    if len(buf) > need:
        raise TensorFormatError("trailing", f"{len(buf) - need} unexpected bytes after payload")
    data = np.frombuffer(buf, dtype=dt.newbyteorder("<"), count=n, offset=HEADER_SIZE)
    return data.astype(dt).reshape(dims)


def save_tensor(t: np.ndarray, path: str | os.PathLike) -> None:
    data = to_bytes(t)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise OSError(f"cannot write tensor to {os.fspath(path)!r}: {exc}") from exc


def load_tensor(path: str | os.PathLike) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read tensor from {os.fspath(path)!r}: {exc}") from exc
    return from_bytes(buf)


def concat_channels(parts: Sequence[np.ndarray]) -> np.ndarray:
    """Stack ``parts`` along the channel axis, in order."""
    if not parts:
        raise ValueError("concat_channels needs at least one part")
    first = np.asarray(parts[0])
    for k, p in enumerate(parts):
        p = np.asarray(p)
        if p.ndim != 4 or p.shape[1:] != first.shape[1:] or p.dtype != first.dtype:
            raise ValueError(
                f"part {k} has shape {p.shape} / {p.dtype}, expected (*, {first.shape[1:]}) / {first.dtype}"
            )
    return np.concatenate(parts, axis=0)


def split_channels(t: np.ndarray, sizes: Sequence[int]) -> list[np.ndarray]:
    """Inverse of :func:`concat_channels`."""
    t = np.asarray(t)
    if any(s < 1 for s in sizes) or sum(sizes) != t.shape[0]:
        raise ValueError(f"channel sizes {list(sizes)} do not partition {t.shape[0]} channels")
    edges = np.cumsum(sizes)[:-1]
    return [np.ascontiguousarray(p) for p in np.split(t, edges, axis=0)]
