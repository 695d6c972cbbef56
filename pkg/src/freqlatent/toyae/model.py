"""Per-patch variational autoencoder with hand-derived gradients.

Each non-overlapping ``(t_p, h_p, w_p)`` patch of a clip is flattened and
encoded independently::

    h   = tanh(x @ enc_w + enc_b)
    mu  = h @ mu_w + mu_b,   logvar = h @ logvar_w + logvar_b
    z   = mu + exp(logvar / 2) * eps          (eps = 0 when not sampling)

The latent of a clip is laid out as ``(C_z, T/t_p, H/h_p, W/w_p)``, so the
wavelet projection mixes neighbouring patches.  Decoding mirrors this::

    g   = tanh(z @ dec_w + dec_b)
    y   = g @ out_w + out_b
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..compression import SubbandMask, fixed_mask, project
from ..tensor import load_tensor, save_tensor

PARAM_NAMES = (
    "enc_w", "enc_b", "mu_w", "mu_b", "logvar_w", "logvar_b",
    "dec_w", "dec_b", "out_w", "out_b",
)


@dataclass
class ToyAEParams:
    in_channels: int
    patch: tuple
    latent_channels: int
    hidden: int
    tensors: dict = field(default_factory=dict)

    @property
    def patch_size(self) -> int:
        t, h, w = self.patch
        return self.in_channels * t * h * w

    def shapes(self) -> dict:
        p, d, c = self.patch_size, self.hidden, self.latent_channels
        return {
            "enc_w": (p, d), "enc_b": (d,),
            "mu_w": (d, c), "mu_b": (c,),
            "logvar_w": (d, c), "logvar_b": (c,),
            "dec_w": (c, d), "dec_b": (d,),
            "out_w": (d, p), "out_b": (p,),
        }

    def __getitem__(self, name):
        return self.tensors[name]

    def copy(self) -> "ToyAEParams":
        return ToyAEParams(self.in_channels, self.patch, self.latent_channels, self.hidden,
                           {k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> dict:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.tensors.values())


def init_params(in_channels=1, patch=(2, 4, 4), latent_channels=4, hidden=64, seed=0,
                dtype=np.float64) -> ToyAEParams:
    """Weights ~ U(-a, a) with ``a = sqrt(1 / fan_in)``; biases zero."""
    p = ToyAEParams(in_channels, tuple(patch), latent_channels, hidden)
    rng = np.random.default_rng([seed, 0])
    for name in PARAM_NAMES:
        shape = p.shapes()[name]
        if name.endswith("_b"):
            p.tensors[name] = np.zeros(shape, dtype=dtype)
        else:
            a = np.sqrt(1.0 / shape[0])
            p.tensors[name] = rng.uniform(-a, a, size=shape).astype(dtype)
    return p


def patchify(v: np.ndarray, patch) -> np.ndarray:
    """``(B, C, T, H, W)`` -> ``(B, T_z, H_z, W_z, C*t_p*h_p*w_p)``."""
    b, c, t, h, w = v.shape
    tp, hp, wp = patch
    for name, n, k in (("time", t, tp), ("height", h, hp), ("width", w, wp)):
        if n % k:
            raise ValueError(f"{name} extent {n} is not divisible by patch size {k}")
    x = v.reshape(b, c, t // tp, tp, h // hp, hp, w // wp, wp)
    x = x.transpose(0, 2, 4, 6, 1, 3, 5, 7)
    return x.reshape(b, t // tp, h // hp, w // wp, c * tp * hp * wp)


def unpatchify(x: np.ndarray, patch, channels: int) -> np.ndarray:
    b, tz, hz, wz, _ = x.shape
    tp, hp, wp = patch
    x = x.reshape(b, tz, hz, wz, channels, tp, hp, wp)
    x = x.transpose(0, 4, 1, 5, 2, 6, 3, 7)
    return x.reshape(b, channels, tz * tp, hz * hp, wz * wp)


def _batched(v):
    v = np.asarray(v)
    if v.ndim == 4:
        return v[None], True
    if v.ndim != 5:
        raise ValueError(f"expected (C, T, H, W) or (B, C, T, H, W), got shape {v.shape}")
    return v, False


def _to_latent(a):
    """(B, Tz, Hz, Wz, C) -> (B, C, Tz, Hz, Wz)"""
    return np.ascontiguousarray(a.transpose(0, 4, 1, 2, 3))


def _from_latent(z):
    return np.ascontiguousarray(z.transpose(0, 2, 3, 4, 1))


def _encode_heads(p: ToyAEParams, v):
    x = patchify(v, p.patch).astype(p["enc_w"].dtype, copy=False)
    h = np.tanh(x @ p["enc_w"] + p["enc_b"])
    mu = h @ p["mu_w"] + p["mu_b"]
    logvar = h @ p["logvar_w"] + p["logvar_b"]
    return x, h, mu, logvar


def encode(p: ToyAEParams, v, sample: bool = False, seed=None):
    """Return ``(z, mu, logvar)``, each shaped like the latent of ``v``.

    Without sampling ``z`` is the mean.  With sampling the noise comes
    from ``numpy.random.default_rng(seed)``.
    """
    v, single = _batched(v)
    if v.shape[1] != p.in_channels:
        raise ValueError(f"expected {p.in_channels} input channels, got {v.shape[1]}")
    _, _, mu, logvar = _encode_heads(p, v)
    if sample:
        eps = np.random.default_rng(seed).standard_normal(mu.shape)
        z = mu + np.exp(0.5 * logvar) * eps
    else:
        z = mu
    out = tuple(_to_latent(a) for a in (z, mu, logvar))
    return tuple(a[0] for a in out) if single else out


def decode(p: ToyAEParams, z) -> np.ndarray:
    z, single = _batched(z)
    if z.shape[1] != p.latent_channels:
        raise ValueError(f"expected {p.latent_channels} latent channels, got {z.shape[1]}")
    zf = _from_latent(z)
    g = np.tanh(zf @ p["dec_w"] + p["dec_b"])
    y = g @ p["out_w"] + p["out_b"]
    out = unpatchify(y, p.patch, p.in_channels)
    return out[0] if single else out


def reconstruct(p: ToyAEParams, v, mask: SubbandMask | None = None, compress: bool = False):
    """Deterministic reconstruction, optionally through the latent zero-out."""
    _, mu, _ = encode(p, v)
    if compress:
        mu = project(mu, mask or fixed_mask())
    return decode(p, mu)


@dataclass
class LossParts:
    recon: float
    kl: float
    total: float


def loss_and_grad(p: ToyAEParams, batch, cfg, seed=None, eps=None, with_grad=True):
    """Loss and analytic parameter gradients for one batch.

    ``total = mean|v - v_hat| + kl_weight * KL`` where KL is the diagonal
    Gaussian divergence from N(0, 1), summed over latent elements and
    averaged over clips.  In ``joint`` mode the sampled latent passes
    through the fixed wavelet zero-out before decoding; since that map is
    a symmetric projection its backward pass is the same projection.  The
    L1 subgradient at zero residual is taken as 0.
    """
    v, _ = _batched(batch)
    b = v.shape[0]
    mask = cfg.compression.mask
    joint = cfg.mode == "joint"

    x, h, mu, logvar = _encode_heads(p, v)
    std = np.exp(0.5 * logvar)
    if eps is None:
        if cfg.sample_latent:
            eps = np.random.default_rng(seed).standard_normal(mu.shape)
        else:
            eps = np.zeros_like(mu)
    z = mu + std * eps
    zc = _from_latent(project(_to_latent(z), mask)) if joint else z

    g = np.tanh(zc @ p["dec_w"] + p["dec_b"])
    y = g @ p["out_w"] + p["out_b"]

    resid = y - x
    n_pix = resid.size
    recon = float(np.abs(resid).sum() / n_pix)

    kl_on_compressed = joint and cfg.kl_on == "compressed"
    m = _from_latent(project(_to_latent(mu), mask)) if kl_on_compressed else mu
    var = std * std
    kl = float(0.5 * np.sum(m * m + var - 1.0 - logvar) / b)
    total = recon + cfg.kl_weight * kl
    parts = LossParts(recon, kl, total)
    if not with_grad:
        return parts, None

    grads = {}
    dy = np.sign(resid) / n_pix
    lead = dy.shape[:-1]
    dy2 = dy.reshape(-1, dy.shape[-1])
    g2 = g.reshape(-1, g.shape[-1])
    grads["out_w"] = g2.T @ dy2
    grads["out_b"] = dy2.sum(axis=0)
    dpre = (dy2 @ p["out_w"].T) * (1.0 - g2 * g2)
    grads["dec_w"] = zc.reshape(-1, zc.shape[-1]).T @ dpre
    grads["dec_b"] = dpre.sum(axis=0)
    dzc = (dpre @ p["dec_w"].T).reshape(lead + (zc.shape[-1],))
    dz = _from_latent(project(_to_latent(dzc), mask)) if joint else dzc

    lam = cfg.kl_weight / b
    dmu = dz + lam * (m if kl_on_compressed else mu)
    dlogvar = dz * eps * 0.5 * std + lam * 0.5 * (var - 1.0)

    h2 = h.reshape(-1, h.shape[-1])
    dmu2 = dmu.reshape(-1, dmu.shape[-1])
    dlv2 = dlogvar.reshape(-1, dlogvar.shape[-1])
    grads["mu_w"] = h2.T @ dmu2
    grads["mu_b"] = dmu2.sum(axis=0)
    grads["logvar_w"] = h2.T @ dlv2
    grads["logvar_b"] = dlv2.sum(axis=0)
    dpre = (dmu2 @ p["mu_w"].T + dlv2 @ p["logvar_w"].T) * (1.0 - h2 * h2)
    grads["enc_w"] = x.reshape(-1, x.shape[-1]).T @ dpre
    grads["enc_b"] = dpre.sum(axis=0)
    return parts, grads


def save_params(p: ToyAEParams, out_dir, config: dict | None = None) -> None:
    """Checkpoint as one LCT1 blob per tensor plus ``manifest.json``.

    Matrices are stored with shape ``(1, 1, rows, cols)``, vectors as
    ``(1, 1, 1, n)``; the manifest keeps the true shapes.
    """
    os.makedirs(out_dir, exist_ok=True)
    entries = {}
    for name in PARAM_NAMES:
        arr = p.tensors[name]
        file = f"{name}.lct1"
        save_tensor(arr.reshape((1,) * (4 - arr.ndim) + arr.shape), os.path.join(out_dir, file))
        entries[name] = {"file": file, "shape": list(arr.shape)}
    manifest = {
        "in_channels": p.in_channels,
        "patch": list(p.patch),
        "latent_channels": p.latent_channels,
        "hidden": p.hidden,
        "tensors": entries,
        "config": config,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_params(in_dir) -> ToyAEParams:
    with open(os.path.join(in_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    p = ToyAEParams(manifest["in_channels"], tuple(manifest["patch"]),
                    manifest["latent_channels"], manifest["hidden"])
    for name in PARAM_NAMES:
        entry = manifest["tensors"][name]
        p.tensors[name] = load_tensor(os.path.join(in_dir, entry["file"])).reshape(entry["shape"])
    return p
