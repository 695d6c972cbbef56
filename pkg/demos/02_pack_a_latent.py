"""
Packing a latent at half size
=============================

Keep four of eight subbands, store them in an LCP1 container, and unpack.
The round trip is an orthogonal projection: applying it twice changes nothing.
"""

import os
import tempfile

import numpy as np

from freqlatent import (
    CompressionConfig,
    PackedLatent,
    compress_latent,
    decompress_latent,
    fixed_mask,
    project,
    save_tensor,
)

rng = np.random.default_rng(0)

# a smooth-ish random latent: cumulative sums along time
z = np.cumsum(rng.standard_normal((8, 16, 16, 16)), axis=1).astype(np.float32)
z /= np.abs(z).max()

packed = compress_latent(z)
print("kept labels", sorted(packed.mask.retained))
print("latent elements", z.size, "stored elements", packed.payload_elements)

with tempfile.TemporaryDirectory() as tmp:
    save_tensor(z, os.path.join(tmp, "z.lct1"))
    packed.save(os.path.join(tmp, "z.lcp1"))
    for name in ("z.lct1", "z.lcp1"):
        print(f"{name}: {os.path.getsize(os.path.join(tmp, name))} bytes")
    back = decompress_latent(PackedLatent.load(os.path.join(tmp, "z.lcp1")))

# what survives, and what a second pass does to it
err = np.sqrt(np.mean((back - z) ** 2))
print("rms error after one pass", err)
print("change on a second pass", np.abs(decompress_latent(compress_latent(back)) - back).max())

# the in-memory projection gives the same answer without serialization
print("same as project()", np.allclose(project(z.astype(np.float64)), back, atol=1e-5))

# the single-level split drops a different half
single = compress_latent(z, CompressionConfig(mask=fixed_mask("single"), mode="single"))
print("single-level rms error", np.sqrt(np.mean((decompress_latent(single) - z) ** 2)))
