"""
Compress during training, or only afterwards?
=============================================

Train the toy autoencoder twice: once with the latent zero-out inside every
forward pass ("joint") and once without it, compressing only at evaluation
("ptlc-eval").  Then compare reconstructions through the compressed latent.

This short run takes about a minute; the acceptance suite runs the full
5000-step version at three seeds.
"""

import logging

from freqlatent.toyae import TrainConfig, standard_spec, synth_dataset, train

logging.basicConfig(level=logging.INFO, format="%(message)s")

data = synth_dataset(standard_spec(seed=100))
val = synth_dataset(standard_spec(seed=200, n_clips=16))

results = {}
for mode in ("joint", "ptlc-eval"):
    print(f"--- {mode}")
    cfg = TrainConfig(mode=mode, steps=1500, eval_every=500, seed=0)
    params, log = train(cfg, data, val)
    results[mode] = log

for mode, log in results.items():
    print(f"{mode:10s} clean {log.psnr_clean[-1]:6.2f} dB   compressed {log.psnr_compressed[-1]:6.2f} dB")
