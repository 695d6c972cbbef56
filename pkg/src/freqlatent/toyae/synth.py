"""Seeded synthetic video clips: drifting Gaussian blobs plus optional texture and noise."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from ..tensor import load_tensor, save_tensor


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic corpus.

    ``motion`` is the largest blob speed in pixels per frame, ``texture``
    the amplitude of a pixel-scale checkerboard that moves with the blobs and
    ``noise`` the standard deviation of additive white noise.  Every random
    draw happens regardless of the amplitudes, so scaling amplitudes never
    changes blob placement.
    """

    n_clips: int = 64
    shape: tuple = (1, 16, 32, 32)
    motion: float = 1.0
    texture: float = 0.0
    noise: float = 0.0
    seed: int = 0
    n_blobs: int = 3
    blob_amplitude: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if self.n_clips < 1:
            raise ValueError("n_clips must be >= 1")
        if len(self.shape) != 4 or min(self.shape) < 1:
            raise ValueError(f"shape must be (C, T, H, W) with positive entries, got {self.shape}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shape"] = list(self.shape)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        return cls(**d)


def standard_spec(seed: int = 0, n_clips: int = 64) -> SynthSpec:
    """Corpus used by the training ablation: textured, noiseless."""
    return SynthSpec(n_clips=n_clips, texture=0.3, seed=seed)


def _periodic_offset(coord, centre, size):
    return (coord - centre + size / 2) % size - size / 2


def synth_clip(rng: np.random.Generator, spec: SynthSpec, clamp: bool = True) -> np.ndarray:
    c, t, h, w = spec.shape
    k = spec.n_blobs
    centre = rng.uniform(0, 1, size=(k, 2)) * (h, w)
    velocity = rng.uniform(-spec.motion, spec.motion, size=(k, 2))
    sigma = rng.uniform(h / 8, h / 4, size=k)
    amp = rng.uniform(0.5, 1.0, size=k)
    gain = rng.uniform(0.5, 1.0, size=c)
    white = rng.standard_normal((c, t, h, w))

    tt = np.arange(t)[:, None]
    cy = (centre[:, 0] + velocity[:, 0] * tt)[:, None, None, :]  # (t, 1, 1, k)
    cx = (centre[:, 1] + velocity[:, 1] * tt)[:, None, None, :]
    dy = _periodic_offset(np.arange(h)[None, :, None, None], cy, h)
    dx = _periodic_offset(np.arange(w)[None, None, :, None], cx, w)
    g = np.exp(-(dy**2 + dx**2) / (2 * sigma**2))  # (t, h, w, k)
    blobs = g @ amp
    # Nyquist-rate checker riding on each blob; integer offsets give a 0/1 checkerboard
    checker = 0.5 * (1 + np.cos(np.pi * dy) * np.cos(np.pi * dx))
    texture = np.minimum((g * checker).sum(axis=-1), 1.0)

    base = spec.blob_amplitude * blobs + spec.texture * texture
    clip = gain[:, None, None, None] * base[None] + spec.noise * white
    if clamp:
        clip = np.clip(clip, 0.0, 1.0)
    return clip


def synth_dataset(spec: SynthSpec, dtype=np.float64, clamp: bool = True) -> np.ndarray:
    """Generate ``spec.n_clips`` clips stacked as ``(N, C, T, H, W)``."""
    rng = np.random.default_rng(spec.seed)
    clips = [synth_clip(rng, spec, clamp) for _ in range(spec.n_clips)]
    return np.stack(clips).astype(dtype)


def save_dataset(clips: np.ndarray, out_dir, spec: SynthSpec | None = None) -> None:
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for i, clip in enumerate(clips):
        name = f"clip_{i:05d}.lct1"
        save_tensor(clip, os.path.join(out_dir, name))
        names.append(name)
    manifest = {"clips": names, "spec": spec.to_dict() if spec else None}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(data_dir) -> np.ndarray:
    with open(os.path.join(data_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    return np.stack([load_tensor(os.path.join(data_dir, n)) for n in manifest["clips"]])
