"""Frequency diagnostics: subband energy, lag-1 autocorrelation, mask overlap, PSNR."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .compression import AnySet, SubbandMask, channel_energy
from .wavelet import LABELS


@dataclass
class EnergyReport:
    """Energy of a subband set.

    ``channel_energy[i, c]`` is the mean square of channel ``c`` of label
    ``LABELS[i]``; ``label_energy[i]`` is the mean square over the whole
    label tensor, ``label_fraction[i]`` its share of ``grand_total`` (the
    plain sum of squares over all subbands).
    """

    labels: tuple
    channel_energy: np.ndarray
    label_energy: np.ndarray
    label_fraction: np.ndarray
    grand_total: float
    elements_per_label: int

    @property
    def is_zero(self) -> bool:
        return self.grand_total == 0.0

    def fraction_of(self, labels) -> float:
        idx = [self.labels.index(lab) for lab in labels]
        return float(self.label_fraction[idx].sum())

    def to_dict(self) -> dict:
        return {
            "kind": "energy",
            "labels": list(self.labels),
            "grand_total": self.grand_total,
            "grand_total_zero": self.is_zero,
            "elements_per_label": self.elements_per_label,
            "label_energy": self.label_energy.tolist(),
            "label_fraction": self.label_fraction.tolist(),
            "channel_energy": self.channel_energy.tolist(),
        }

    def to_csv(self) -> str:
        """One row per (label, channel)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "channel", "energy", "label_energy", "label_fraction"])
        for i, lab in enumerate(self.labels):
            for c, e in enumerate(self.channel_energy[i]):
                w.writerow([lab, c, repr(float(e)), repr(float(self.label_energy[i])),
                            repr(float(self.label_fraction[i]))])
        return buf.getvalue()


def subband_energy(s: AnySet) -> EnergyReport:
    per_channel = channel_energy(s)
    label_energy = per_channel.mean(axis=1)
    count = int(np.prod(s.band_shape))
    sums = label_energy * count
    grand = float(sums.sum())
    fraction = sums / grand if grand > 0 else np.zeros_like(sums)
    return EnergyReport(LABELS, per_channel, label_energy, fraction, grand, count)


@dataclass
class AutocorrReport:
    """Per-channel lag-1 autocorrelation, keyed by subband label.

    For a plain tensor the single key is ``""``.  Channels with zero
    variance are flagged in ``degenerate`` and report ``rho = 0``.
    """

    rho: dict
    degenerate: dict

    def mean_rho(self, labels=None, include_degenerate: bool = False) -> float:
        labels = list(self.rho) if labels is None else list(labels)
        vals = []
        for lab in labels:
            r, d = self.rho[lab], self.degenerate[lab]
            vals.append(r if include_degenerate else r[~d])
        vals = np.concatenate(vals)
        return float(vals.mean()) if vals.size else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": "autocorr",
            "labels": list(self.rho),
            "rho": {k: v.tolist() for k, v in self.rho.items()},
            "degenerate": {k: v.tolist() for k, v in self.degenerate.items()},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "channel", "rho", "degenerate"])
        for lab in self.rho:
            for c, (r, d) in enumerate(zip(self.rho[lab], self.degenerate[lab])):
                w.writerow([lab, c, repr(float(r)), int(d)])
        return buf.getvalue()


def _lag1(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if x.ndim != 4:
        raise ValueError(f"expected a (C, T, H, W) tensor, got shape {x.shape}")
    if x.shape[1] < 2:
        raise ValueError(f"lag-1 autocorrelation needs T >= 2, got T = {x.shape[1]}")
    x = np.asarray(x, dtype=np.float64)
    mu = x.mean(axis=(1, 2, 3), keepdims=True)
    d = x - mu
    var = np.mean(d * d, axis=(1, 2, 3))
    cov = np.mean(d[:, :-1] * d[:, 1:], axis=(1, 2, 3))
    # zero variance up to rounding of the mean
    scale = np.mean(x * x, axis=(1, 2, 3))
    degenerate = var <= 1e-28 + 1e-20 * scale
    rho = np.where(degenerate, 0.0, cov / np.where(degenerate, 1.0, var))
    return rho, degenerate


def lag1_autocorr(t: np.ndarray) -> AutocorrReport:
    """Lag-1 temporal autocorrelation of each channel of a ``(C, T, H, W)`` tensor.

    Mean and variance run over all ``(t, h, w)`` of the channel; the
    lagged products average over the ``T - 1`` consecutive frame pairs.
    Note the ratio can slightly exceed 1 in magnitude for very short T.
    """
    rho, deg = _lag1(np.asarray(t))
    return AutocorrReport({"": rho}, {"": deg})


def subband_autocorr(s: AnySet) -> AutocorrReport:
    s.validate()
    rho, deg = {}, {}
    for lab in LABELS:
        rho[lab], deg[lab] = _lag1(s.bands[lab])
    return AutocorrReport(rho, deg)


def channel_overlap(a: SubbandMask, b: SubbandMask, n_channels: int | None = None) -> float:
    """Jaccard index of the kept (label, channel) slots of two masks.

    Label-level masks are expanded to the channel count of the other mask,
    or ``n_channels`` when neither carries a bitmap.
    """
    if a.mode != b.mode:
        raise ValueError(f"masks have different modes ({a.mode} vs {b.mode})")
    widths = {m.channels.shape[1] for m in (a, b) if m.per_channel}
    if len(widths) > 1:
        raise ValueError(f"masks cover different channel counts {sorted(widths)}")
    if widths:
        n = widths.pop()
        if n_channels is not None and n_channels != n:
            raise ValueError(f"n_channels={n_channels} disagrees with mask width {n}")
    else:
        n = n_channels or 1
    ba, bb = a.bitmap(n), b.bitmap(n)
    union = np.logical_or(ba, bb).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(ba, bb).sum() / union)


def psnr(reference: np.ndarray, test: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` when the inputs match."""
    reference = np.asarray(reference)
    test = np.asarray(test)
    if reference.shape != test.shape:
        raise ValueError(f"shape mismatch: {reference.shape} vs {test.shape}")
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    mse = np.mean(np.square(reference.astype(np.float64) - test.astype(np.float64)))
    if mse == 0:
        return math.inf
    return float(10.0 * np.log10(peak * peak / mse))


def report_json(report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True)
