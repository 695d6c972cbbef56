"""Subband zero-out masks and the LCP1 packed-latent container.

The fixed mask keeps subbands ``LLL, LLH, LHL, HLL`` and zeroes the other
four, halving the stored volume.  Because the transforms are orthonormal,
masking followed by the inverse transform is an orthogonal projection of
the latent.

LCP1 layout (little-endian)::

    offset  size  field
    0       4     magic b"LCP1"
    4       1     format version (1)
    5       1     mode (0 = single-level, 1 = multi-WT)
    6       1     dtype tag (0 = f32, 1 = f64)
    7       32    u64 source dims C, T, H, W
    39      8     group order: canonical label index per slot
    47      1     mask kind (0 = label set, 1 = per-channel)
    48      k     kind 0: one byte, bit i set if label i is kept
                  kind 1: bitmap of 8*n bits, label-major, LSB first,
                          padded to a byte (n = channels per subband)
    48+k    ...   payload: kept channels of each kept label, labels in
                  canonical order, raw samples row-major
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from . import wavelet
from .tensor import DTYPE_TAGS, TAG_DTYPES, as_video, dtype_tag
from .wavelet import (
    DEFAULT_GROUP_ORDER,
    FIXED_RETAINED,
    LABEL_INDEX,
    LABELS,
    MultiWTSet,
    SubbandSet,
)

MAGIC = b"LCP1"
VERSION = 1
MODES = {"single": 0, "multi": 1}
MODE_NAMES = {v: k for k, v in MODES.items()}
_HEAD = struct.Struct("<4sBBB4Q8sB")
HEADER_SIZE = _HEAD.size  # 48, excluding the mask bitmap

AnySet = Union[MultiWTSet, SubbandSet]


class PackFormatError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be 'single' or 'multi', got {mode!r}")
    return mode


@dataclass(frozen=True, eq=False)
class SubbandMask:
    """Which subbands (optionally which channels of each) survive zero-out.

    ``channels`` is either ``None`` (whole labels) or a boolean array of
    shape ``(8, n)`` whose rows follow the canonical label order.
    """

    retained: frozenset
    mode: str = "multi"
    channels: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        _check_mode(self.mode)
        bad = set(self.retained) - set(LABELS)
        if bad:
            raise ValueError(f"unknown subband labels {sorted(bad)}")
        object.__setattr__(self, "retained", frozenset(self.retained))
        if self.channels is not None:
            bm = np.asarray(self.channels, dtype=bool)
            if bm.ndim != 2 or bm.shape[0] != 8:
                raise ValueError(f"channel bitmap must have shape (8, n), got {bm.shape}")
            bm.setflags(write=False)
            object.__setattr__(self, "channels", bm)
            rows = frozenset(lab for lab, row in zip(LABELS, bm) if row.any())
            if rows != self.retained:
                raise ValueError("retained labels disagree with the channel bitmap")

    @classmethod
    def from_bitmap(cls, bitmap, mode: str = "multi") -> "SubbandMask":
        bm = np.asarray(bitmap, dtype=bool)
        retained = frozenset(lab for lab, row in zip(LABELS, bm) if row.any())
        return cls(retained, mode, bm)

    @property
    def per_channel(self) -> bool:
        return self.channels is not None

    def bitmap(self, n_channels: int) -> np.ndarray:
        """Boolean ``(8, n_channels)`` keep-map."""
        if self.channels is not None:
            if self.channels.shape[1] != n_channels:
                raise ValueError(
                    f"mask covers {self.channels.shape[1]} channels per subband, set has {n_channels}"
                )
            return self.channels.copy()
        rows = np.array([lab in self.retained for lab in LABELS])
        return np.repeat(rows[:, None], n_channels, axis=1)

    def __eq__(self, other):
        if not isinstance(other, SubbandMask):
            return NotImplemented
        if self.mode != other.mode or self.retained != other.retained:
            return False
        if self.channels is None and other.channels is None:
            return True
        n = (self.channels if self.channels is not None else other.channels).shape[1]
        return np.array_equal(self.bitmap(n), other.bitmap(n))

    __hash__ = None


def fixed_mask(mode: str = "multi") -> SubbandMask:
    return SubbandMask(frozenset(FIXED_RETAINED), mode)


def label_mask(labels: Iterable[str], mode: str = "multi") -> SubbandMask:
    return SubbandMask(frozenset(labels), mode)


@dataclass(frozen=True)
class CompressionConfig:
    mask: SubbandMask = field(default_factory=fixed_mask)
    mode: str = "multi"
    dtype: str | None = None

    def __post_init__(self):
        _check_mode(self.mode)
        if self.mask.mode != self.mode:
            raise ValueError(f"mask mode {self.mask.mode!r} does not match config mode {self.mode!r}")


def _same_type(s: AnySet, bands: dict) -> AnySet:
    if isinstance(s, MultiWTSet):
        return MultiWTSet(bands, s.source_shape, s.group_order)
    return SubbandSet(bands, s.source_shape)


def _mask_bands(bands: dict, bitmap: np.ndarray) -> dict:
    out = {}
    for i, lab in enumerate(LABELS):
        b = bands[lab]
        keep = bitmap[i]
        if keep.all():
            out[lab] = b.copy()
        elif not keep.any():
            out[lab] = np.zeros_like(b)
        else:
            out[lab] = np.where(keep[:, None, None, None], b, b.dtype.type(0))
    return out


def apply_mask(s: AnySet, mask: SubbandMask) -> AnySet:
    """Zero every subband (or channel) the mask does not retain."""
    if s.mode != mask.mode:
        raise ValueError(f"mask mode {mask.mode!r} does not match {type(s).__name__}")
    s.validate()
    return _same_type(s, _mask_bands(s.bands, mask.bitmap(s.n_channels)))


@dataclass(frozen=True, eq=False)
class PackedLatent:
    """A latent with only its retained subbands stored."""

    mode: str
    source_shape: tuple
    dtype: np.dtype
    group_order: tuple
    mask: SubbandMask
    payload: bytes

    @property
    def n_channels(self) -> int:
        c = self.source_shape[0]
        return 4 * c if self.mode == "multi" else c

    @property
    def band_shape(self) -> tuple:
        c, t, h, w = self.source_shape
        if self.mode == "multi":
            return (4 * c, t // 8, h // 2, w // 2)
        return (c, t // 2, h // 2, w // 2)

    @property
    def payload_elements(self) -> int:
        return len(self.payload) // self.dtype.itemsize

    def to_bytes(self) -> bytes:
        order = bytes(LABEL_INDEX[lab] for lab in self.group_order)
        if self.mask.per_channel:
            kind = 1
            bits = self.mask.bitmap(self.n_channels).reshape(-1)
            desc = np.packbits(bits, bitorder="little").tobytes()
        else:
            kind = 0
            desc = bytes([sum(1 << i for i, lab in enumerate(LABELS) if lab in self.mask.retained)])
        head = _HEAD.pack(
            MAGIC, VERSION, MODES[self.mode], dtype_tag(self.dtype), *self.source_shape, order, kind
        )
        return head + desc + self.payload

    @classmethod
    def from_bytes(cls, buf: bytes) -> "PackedLatent":
        if len(buf) < 4 or buf[:4] != MAGIC:
            raise PackFormatError("magic", f"expected {MAGIC!r}, got {bytes(buf[:4])!r}")
        if len(buf) < HEADER_SIZE:
            raise PackFormatError("truncated", f"header needs {HEADER_SIZE} bytes, got {len(buf)}")
        _, version, mode, tag, c, t, h, w, order, kind = _HEAD.unpack_from(buf)
        if version != VERSION:
            raise PackFormatError("version", f"unsupported version {version}")
        if mode not in MODE_NAMES:
            raise PackFormatError("mode", f"unknown mode {mode}")
        if tag not in TAG_DTYPES:
            raise PackFormatError("dtype", f"unknown dtype tag {tag}")
        mode = MODE_NAMES[mode]
        shape = (c, t, h, w)
        if min(shape) < 1 or max(shape) >= 2**31:
            raise PackFormatError("dims", f"bad source dims {shape}")
        tdiv = 8 if mode == "multi" else 2
        if t % tdiv or h % 2 or w % 2:
            raise PackFormatError("dims", f"source dims {shape} not decomposable in {mode} mode")
        if any(i >= 8 for i in order):
            raise PackFormatError("group_order", f"label index out of range in {list(order)}")
        group_order = tuple(LABELS[i] for i in order)
        try:
            wavelet.check_group_order(group_order)
        except ValueError as exc:
            raise PackFormatError("group_order", str(exc)) from None
        n = 4 * c if mode == "multi" else c
        pos = HEADER_SIZE
        if kind == 0:
            if len(buf) < pos + 1:
                raise PackFormatError("truncated", "missing label bitmap")
            byte = buf[pos]
            mask = SubbandMask(frozenset(lab for i, lab in enumerate(LABELS) if byte >> i & 1), mode)
            pos += 1
        elif kind == 1:
            nbytes = (8 * n + 7) // 8
            if len(buf) < pos + nbytes:
                raise PackFormatError("truncated", "channel bitmap cut short")
            bits = np.unpackbits(
                np.frombuffer(buf, np.uint8, nbytes, pos), count=8 * n, bitorder="little"
            )
            mask = SubbandMask.from_bitmap(bits.reshape(8, n).astype(bool), mode)
            pos += nbytes
        else:
            raise PackFormatError("mask", f"unknown mask kind {kind}")
        dt = TAG_DTYPES[tag]
        per_channel = (t // tdiv) * (h // 2) * (w // 2)
        need = int(mask.bitmap(n).sum()) * per_channel * dt.itemsize
        payload = bytes(buf[pos:])
        if len(payload) < need:
            raise PackFormatError("truncated", f"payload needs {need} bytes, got {len(payload)}")
        if len(payload) > need:
            raise PackFormatError("trailing", f"{len(payload) - need} unexpected bytes after payload")
        return cls(mode, shape, dt, group_order, mask, payload)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "PackedLatent":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def pack(m: AnySet, mask: SubbandMask) -> PackedLatent:
    """Serialize only the retained subbands of ``m``."""
    if m.mode != mask.mode:
        raise ValueError(f"mask mode {mask.mode!r} does not match {type(m).__name__}")
    m.validate()
    if len(m.band_shape) != 4:
        raise ValueError(f"pack expects unbatched subbands, got shape {m.band_shape}")
    bitmap = mask.bitmap(m.n_channels)
    dt = m.bands[LABELS[0]].dtype
    if dt not in DTYPE_TAGS:
        raise ValueError(f"unsupported dtype {dt}")
    le = dt.newbyteorder("<")
    chunks = [
        np.ascontiguousarray(m.bands[lab][bitmap[i]], dtype=le).tobytes()
        for i, lab in enumerate(LABELS)
        if bitmap[i].any()
    ]
    order = getattr(m, "group_order", DEFAULT_GROUP_ORDER)
    return PackedLatent(m.mode, tuple(m.source_shape), dt, tuple(order), mask, b"".join(chunks))


def unpack(p: PackedLatent) -> AnySet:
    """Restore the subband set, zero-filling every non-retained slot."""
    shape = p.band_shape
    n = shape[0]
    per_channel = int(np.prod(shape[1:]))
    bitmap = p.mask.bitmap(n)
    need = int(bitmap.sum()) * per_channel * p.dtype.itemsize
    if len(p.payload) != need:
        raise PackFormatError("truncated", f"payload has {len(p.payload)} bytes, mask needs {need}")
    flat = np.frombuffer(p.payload, dtype=p.dtype.newbyteorder("<")).astype(p.dtype)
    bands = {}
    pos = 0
    for i, lab in enumerate(LABELS):
        band = np.zeros(shape, dtype=p.dtype)
        k = int(bitmap[i].sum())
        if k:
            band[bitmap[i]] = flat[pos : pos + k * per_channel].reshape((k,) + shape[1:])
            pos += k * per_channel
        bands[lab] = band
    if p.mode == "multi":
        return MultiWTSet(bands, p.source_shape, p.group_order)
    return SubbandSet(bands, p.source_shape)


def compress_latent(z: np.ndarray, cfg: CompressionConfig | None = None) -> PackedLatent:
    cfg = cfg or CompressionConfig()
    z = as_video(z, cfg.dtype)
    s = wavelet.multi_wt(z) if cfg.mode == "multi" else wavelet.wt3d(z)
    return pack(s, cfg.mask)


def decompress_latent(p: PackedLatent) -> np.ndarray:
    s = unpack(p)
    return wavelet.multi_iwt(s) if p.mode == "multi" else wavelet.iwt3d(s)


def project(x: np.ndarray, mask: SubbandMask | None = None, group_order=DEFAULT_GROUP_ORDER) -> np.ndarray:
    """In-memory ``decompress_latent(compress_latent(x))`` without serialization.

    ``x`` may carry leading batch axes in front of ``(C, T, H, W)``.  With
    the orthonormal transforms this is an orthogonal projection, so it is
    also its own adjoint.
    """
    mask = mask or fixed_mask()
    if mask.mode == "multi":
        bands = wavelet._multi_wt(x, group_order)
        n = x.shape[-4] * 4
    else:
        bands = wavelet._wt3d(x)
        n = x.shape[-4]
    bands = _mask_bands(bands, mask.bitmap(n))
    if mask.mode == "multi":
        return wavelet._multi_iwt(bands, group_order)
    return wavelet._iwt3d(bands)


def channel_energy(s: AnySet) -> np.ndarray:
    """Mean squared value of every (label, channel) slot, shape ``(8, n)``, f64."""
    s.validate()
    axes = tuple(range(-3, 0))
    return np.stack(
        [np.mean(np.square(s.bands[lab], dtype=np.float64), axis=axes) for lab in LABELS]
    )


def adaptive_select(m: AnySet, keep_fraction: float = 0.5) -> SubbandMask:
    """Keep the highest-energy ``ceil(keep_fraction * 8n)`` (label, channel) slots.

    Ties go to the earlier label in canonical order, then the lower channel.
    """
    if not 0 < keep_fraction <= 1:
        raise ValueError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    if not m.bands:
        raise ValueError("cannot select from an empty subband set")
    energy = channel_energy(m)
    if energy.ndim != 2:
        raise ValueError("adaptive_select expects unbatched subbands")
    n_labels, n = energy.shape
    total = n_labels * n
    k = min(total, math.ceil(keep_fraction * total - 1e-9))
    lab_idx, ch_idx = np.meshgrid(np.arange(n_labels), np.arange(n), indexing="ij")
    order = np.lexsort((ch_idx.ravel(), lab_idx.ravel(), -energy.ravel()))
    keep = np.zeros(total, dtype=bool)
    keep[order[:k]] = True
    return SubbandMask.from_bitmap(keep.reshape(n_labels, n), m.mode)
