"""Orthonormal Haar transforms on video tensors.

Two decompositions are provided:

* :func:`wt3d` -- one 3D Haar level giving eight subbands whose labels
  name the filter used along (time, height, width), e.g. ``"LHL"``.
* :func:`multi_wt` -- the three-stage decomposition used for latent
  compression: one 3D level, then the eight subbands are grouped by their
  temporal letter, channel-concatenated, and filtered twice more along
  time.  Here the label letters name the *stage* (1, 2, 3), not the axis.

Both are orthonormal, so energy is preserved and the inverses are exact
up to rounding.  Internals accept extra leading batch axes; the public
functions expect ``(C, T, H, W)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .tensor import as_video

INV_SQRT2 = 1.0 / np.sqrt(2.0)
LOW_FILTER = np.array([INV_SQRT2, INV_SQRT2])
HIGH_FILTER = np.array([INV_SQRT2, -INV_SQRT2])

AXES = {"time": -3, "height": -2, "width": -1}

# Lexicographic; also the canonical on-disk order.
LABELS = tuple("".join(p) for p in itertools.product("LH", repeat=3))
LABEL_INDEX = {lab: i for i, lab in enumerate(LABELS)}
DEFAULT_GROUP_ORDER = LABELS
FIXED_RETAINED = ("LLL", "LLH", "LHL", "HLL")


class DimensionError(ValueError):
    def __init__(self, axis: str, message: str):
        super().__init__(f"{axis}: {message}")
        self.axis = axis


def _axis(axis) -> int:
    if isinstance(axis, str):
        try:
            return AXES[axis]
        except KeyError:
            raise ValueError(f"unknown axis {axis!r}; expected one of {list(AXES)}") from None
    return axis


def _axis_name(ax: int) -> str:
    return {v: k for k, v in AXES.items()}.get(ax, str(ax))


def _take(x, ax, sl):
    idx = [slice(None)] * x.ndim
    idx[ax] = sl
    return x[tuple(idx)]


def analysis(x: np.ndarray, axis) -> tuple[np.ndarray, np.ndarray]:
    ax = _axis(axis)
    n = x.shape[ax]
    if n < 2 or n % 2:
        raise DimensionError(_axis_name(ax), f"extent must be even and >= 2, got {n}")
    a = _take(x, ax, slice(0, None, 2))
    b = _take(x, ax, slice(1, None, 2))
    s = x.dtype.type(INV_SQRT2)
    return (a + b) * s, (a - b) * s


def synthesis(low: np.ndarray, high: np.ndarray, axis) -> np.ndarray:
    ax = _axis(axis)
    if low.shape != high.shape:
        raise ValueError(f"low/high shape mismatch: {low.shape} vs {high.shape}")
    s = low.dtype.type(INV_SQRT2)
    a = (low + high) * s
    b = (low - high) * s
    # interleave a, b along ax
    out = np.stack([a, b], axis=ax % low.ndim + 1)
    shape = list(low.shape)
    shape[ax] *= 2
    return out.reshape(shape)


def haar_analysis_axis(t: np.ndarray, axis: str) -> tuple[np.ndarray, np.ndarray]:
    """Split ``t`` into (low, high) halves along ``axis`` ("time", "height" or "width").

    For each adjacent pair ``(a, b)``: ``low = (a + b)/sqrt(2)``,
    ``high = (a - b)/sqrt(2)``.
    """
    return analysis(as_video(t), axis)


def haar_synthesis_axis(low: np.ndarray, high: np.ndarray, axis: str) -> np.ndarray:
    return synthesis(as_video(low), as_video(high), axis)


@dataclass
class SubbandSet:
    """Eight subbands of a single 3D Haar level, keyed by per-axis label."""

    bands: dict[str, np.ndarray]
    source_shape: tuple[int, ...]

    mode = "single"

    def validate(self) -> None:
        missing = [lab for lab in LABELS if lab not in self.bands]
        if missing:
            raise ValueError(f"subband set is missing labels {missing}")
        shapes = {self.bands[lab].shape for lab in LABELS}
        if len(shapes) != 1:
            raise ValueError(f"subbands have differing shapes {sorted(shapes)}")
        (shape,) = shapes
        c, t, h, w = self.source_shape
        if shape[-4:] != (c, t // 2, h // 2, w // 2):
            raise ValueError(f"subband shape {shape} does not match source {self.source_shape}")

    @property
    def band_shape(self) -> tuple[int, ...]:
        return self.bands[LABELS[0]].shape

    @property
    def n_channels(self) -> int:
        return self.band_shape[-4]


@dataclass
class MultiWTSet:
    """Eight stage-labelled tensors of shape ``(4C, T/8, H/2, W/2)``.

    ``group_order`` lists the eight stage-1 labels in concatenation order:
    the first four (temporal letter L) form the low group, the last four
    the high group.
    """

    bands: dict[str, np.ndarray]
    source_shape: tuple[int, ...]
    group_order: tuple[str, ...] = field(default=DEFAULT_GROUP_ORDER)

    mode = "multi"

    def validate(self) -> None:
        check_group_order(self.group_order)
        missing = [lab for lab in LABELS if lab not in self.bands]
        if missing:
            raise ValueError(f"multi-WT set is missing labels {missing}")
        shapes = {self.bands[lab].shape for lab in LABELS}
        if len(shapes) != 1:
            raise ValueError(f"multi-WT tensors have differing shapes {sorted(shapes)}")
        (shape,) = shapes
        c, t, h, w = self.source_shape
        if shape[-4:] != (4 * c, t // 8, h // 2, w // 2):
            raise ValueError(f"multi-WT shape {shape} does not match source {self.source_shape}")

    @property
    def band_shape(self) -> tuple[int, ...]:
        return self.bands[LABELS[0]].shape

    @property
    def n_channels(self) -> int:
        return self.band_shape[-4]


def check_group_order(order) -> tuple[str, ...]:
    order = tuple(order)
    if sorted(order) != sorted(LABELS):
        raise ValueError(f"group order must be a permutation of {LABELS}, got {order}")
    if any(lab[0] != "L" for lab in order[:4]) or any(lab[0] != "H" for lab in order[4:]):
        raise ValueError(f"group order must list the four L-temporal labels first, got {order}")
    return order


def _wt3d(x: np.ndarray) -> dict[str, np.ndarray]:
    bands = {"": x}
    for ax in ("time", "height", "width"):
        nxt = {}
        for lab, b in bands.items():
            lo, hi = analysis(b, ax)
            nxt[lab + "L"] = lo
            nxt[lab + "H"] = hi
        bands = nxt
    return bands


def _iwt3d(bands: dict[str, np.ndarray]) -> np.ndarray:
    for ax in ("width", "height", "time"):
        bands = {
            lab: synthesis(bands[lab + "L"], bands[lab + "H"], ax)
            for lab in {k[:-1] for k in bands}
        }
    return bands[""]


def _multi_wt(x: np.ndarray, group_order) -> dict[str, np.ndarray]:
    stage1 = _wt3d(x)
    groups = {
        "L": np.concatenate([stage1[lab] for lab in group_order[:4]], axis=-4),
        "H": np.concatenate([stage1[lab] for lab in group_order[4:]], axis=-4),
    }
    for _ in range(2):
        nxt = {}
        for lab, g in groups.items():
            lo, hi = analysis(g, "time")
            nxt[lab + "L"] = lo
            nxt[lab + "H"] = hi
        groups = nxt
    return groups


def _multi_iwt(bands: dict[str, np.ndarray], group_order) -> np.ndarray:
    for _ in range(2):
        bands = {
            lab: synthesis(bands[lab + "L"], bands[lab + "H"], "time")
            for lab in {k[:-1] for k in bands}
        }
    stage1 = {}
    for letter, labs in (("L", group_order[:4]), ("H", group_order[4:])):
        parts = np.split(bands[letter], 4, axis=-4)
        stage1.update(zip(labs, parts))
    return _iwt3d(stage1)


def _require_even(shape, axes=("time", "height", "width")):
    for name in axes:
        n = shape[AXES[name]]
        if n % 2:
            raise DimensionError(name, f"extent must be even, got {n}")


def wt3d(t: np.ndarray) -> SubbandSet:
    """One level of the separable 3D Haar transform.

    Filters are applied along time, then height, then width; label letters
    follow the same order.
    """
    t = as_video(t)
    _require_even(t.shape)
    return SubbandSet(_wt3d(t), t.shape)


def iwt3d(s: SubbandSet) -> np.ndarray:
    s.validate()
    return _iwt3d(dict(s.bands))


def multi_wt(z: np.ndarray, group_order=DEFAULT_GROUP_ORDER) -> MultiWTSet:
    z = as_video(z)
    group_order = check_group_order(group_order)
    if z.shape[1] % 8:
        raise DimensionError("time", f"T_z ≡ 0 mod 8 required, got T_z = {z.shape[1]}")
    _require_even(z.shape, ("height", "width"))
    return MultiWTSet(_multi_wt(z, group_order), z.shape, group_order)


def multi_iwt(m: MultiWTSet) -> np.ndarray:
    m.validate()
    return _multi_iwt(dict(m.bands), m.group_order)


__all__ = [
    "LABELS",
    "FIXED_RETAINED",
    "DEFAULT_GROUP_ORDER",
    "LOW_FILTER",
    "HIGH_FILTER",
    "DimensionError",
    "SubbandSet",
    "MultiWTSet",
    "haar_analysis_axis",
    "haar_synthesis_axis",
    "wt3d",
    "iwt3d",
    "multi_wt",
    "multi_iwt",
]
