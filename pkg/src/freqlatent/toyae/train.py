"""Training loop for the toy autoencoder, with joint and post-training compression modes."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..analytics import psnr
from ..compression import CompressionConfig, SubbandMask, fixed_mask, label_mask
from . import model

log = logging.getLogger(__name__)

# settings published for the full-scale model; the toy defaults differ
REFERENCE_LEARNING_RATE = 1e-5
REFERENCE_KL_WEIGHT = 1e-6
MODES = ("none", "joint", "ptlc-eval")


@dataclass
class TrainConfig:
    """Training hyperparameters.

    ``mode``: ``none`` never compresses; ``joint`` puts the latent zero-out
    inside every forward pass; ``ptlc-eval`` trains exactly like ``none``
    and only adds the compressed-latent path at validation.
    ``kl_on`` picks whether the KL mean term sees the latent before
    (``latent``) or after (``compressed``) the zero-out in joint mode.
    """

    learning_rate: float = 1e-2
    kl_weight: float = REFERENCE_KL_WEIGHT
    batch_size: int = 8
    steps: int = 5000
    seed: int = 0
    mode: str = "none"
    compression: CompressionConfig = field(default_factory=CompressionConfig)
    kl_on: str = "latent"
    sample_latent: bool = True
    patch: tuple = (2, 4, 4)
    latent_channels: int = 4
    hidden: int = 64
    eval_every: int = 500
    log_every: int = 1

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.kl_weight < 0:
            raise ValueError("kl_weight must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.kl_on not in ("latent", "compressed"):
            raise ValueError(f"kl_on must be 'latent' or 'compressed', got {self.kl_on!r}")
        self.patch = tuple(self.patch)

    def to_dict(self) -> dict:
        d = asdict(self)
        mask = self.compression.mask
        d["compression"] = {"mode": self.compression.mode, "retained": sorted(mask.retained)}
        d["patch"] = list(self.patch)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        comp = d.pop("compression", None)
        if comp is not None:
            mode = comp.get("mode", "multi")
            retained = comp.get("retained")
            mask = label_mask(retained, mode) if retained is not None else fixed_mask(mode)
            d["compression"] = CompressionConfig(mask=mask, mode=mode)
        return cls(**d)


@dataclass
class TrainLog:
    steps: list = field(default_factory=list)
    recon: list = field(default_factory=list)
    kl: list = field(default_factory=list)
    total: list = field(default_factory=list)
    eval_steps: list = field(default_factory=list)
    psnr_clean: list = field(default_factory=list)
    psnr_compressed: list = field(default_factory=list)

    def record(self, step: int, parts: model.LossParts) -> None:
        self.steps.append(step)
        self.recon.append(parts.recon)
        self.kl.append(parts.kl)
        self.total.append(parts.total)

    def to_csv(self) -> str:
        """Columns: step, recon, kl, total, psnr_clean, psnr_compressed.

        PSNR cells are empty except on evaluation steps.
        """
        evals = dict(zip(self.eval_steps, zip(self.psnr_clean, self.psnr_compressed)))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "recon", "kl", "total", "psnr_clean", "psnr_compressed"])
        rows = {s: [repr(r), repr(k), repr(t)] for s, r, k, t in zip(self.steps, self.recon, self.kl, self.total)}
        for s in sorted(set(rows) | set(evals)):
            loss = rows.get(s, ["", "", ""])
            ev = [_fmt_db(x) for x in evals[s]] if s in evals else ["", ""]
            w.writerow([s, *loss, *ev])
        return buf.getvalue()


def _fmt_db(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int, log: TrainLog):
        super().__init__(f"non-finite loss or parameters at step {step}")
        self.step = step
        self.log = log


def evaluate(params: model.ToyAEParams, clips, compress: bool, mask: SubbandMask | None = None,
             peak: float = 1.0) -> np.ndarray:
    """Per-clip PSNR of deterministic reconstructions."""
    clips = np.asarray(clips)
    recon = model.reconstruct(params, clips, mask, compress=compress)
    return np.array([psnr(c, r, peak) for c, r in zip(clips, recon)])


def _mean_db(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    return math.inf if np.all(np.isinf(values)) else float(np.mean(values[np.isfinite(values)]))


def train(cfg: TrainConfig, data, val=None, params: model.ToyAEParams | None = None):
    """Plain fixed-rate gradient descent; returns ``(params, log)``.

    ``data`` is ``(N, C, T, H, W)``.  Validation uses ``val`` when given,
    otherwise the first eight training clips.  Batches, latent noise and
    initialization each draw from their own stream seeded by ``cfg.seed``.
    """
    data = np.asarray(data, dtype=np.float64)
    val = data[:8] if val is None else np.asarray(val, dtype=np.float64)
    if params is None:
        params = model.init_params(data.shape[1], cfg.patch, cfg.latent_channels, cfg.hidden, cfg.seed)
    else:
        params = params.copy()
    batch_rng = np.random.default_rng([cfg.seed, 1])
    noise_rng = np.random.default_rng([cfg.seed, 2])
    mask = cfg.compression.mask
    log_ = TrainLog()
    n = data.shape[0]
    bs = min(cfg.batch_size, n)

    def run_eval(step):
        clean = _mean_db(evaluate(params, val, compress=False))
        comp = _mean_db(evaluate(params, val, compress=True, mask=mask))
        log_.eval_steps.append(step)
        log_.psnr_clean.append(clean)
        log_.psnr_compressed.append(comp)
        log.info("step %d  psnr clean %.3f  compressed %.3f", step, clean, comp)

    for step in range(cfg.steps):
        idx = batch_rng.choice(n, size=bs, replace=False)
        batch = data[idx]
        eps = None
        if cfg.sample_latent:
            tz, hz, wz = (s // k for s, k in zip(batch.shape[2:], cfg.patch))
            eps = noise_rng.standard_normal((bs, tz, hz, wz, cfg.latent_channels))
        parts, grads = model.loss_and_grad(params, batch, cfg, eps=eps)
        if not math.isfinite(parts.total):
            raise TrainingDiverged(step, log_)
        if step % cfg.log_every == 0:
            log_.record(step, parts)
        if cfg.eval_every and step % cfg.eval_every == 0:
            run_eval(step)
        for name, g in grads.items():
            params.tensors[name] -= cfg.learning_rate * g
        if not params.all_finite():
            raise TrainingDiverged(step, log_)
    run_eval(cfg.steps)
    return params, log_
