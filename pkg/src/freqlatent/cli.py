"""Command-line front end.  Every subcommand is a thin wrapper over the library.

Exit codes: 0 success, 1 runtime or numeric failure, 2 usage or format error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from . import analytics, compression, wavelet
from .tensor import TensorFormatError, load_tensor, save_tensor
from .toyae import synth
from .toyae.train import TrainConfig, TrainingDiverged, evaluate, train
from .toyae.model import load_params, save_params

DTYPES = {"f32": np.float32, "f64": np.float64}


class UsageError(Exception):
    pass


def _load(path, args):
    t = load_tensor(path)
    if args.dtype:
        t = t.astype(DTYPES[args.dtype])
    return t


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_wt(args):
    t = _load(args.input, args)
    s = wavelet.multi_wt(t) if args.mode == "multi" else wavelet.wt3d(t)
    os.makedirs(args.out_dir, exist_ok=True)
    files = {}
    for lab in wavelet.LABELS:
        name = f"{lab}.lct1"
        save_tensor(s.bands[lab], os.path.join(args.out_dir, name))
        files[lab] = name
    _write_json(os.path.join(args.out_dir, "manifest.json"), {
        "mode": args.mode,
        "labels": list(wavelet.LABELS),
        "files": files,
        "band_shape": list(s.band_shape),
        "source_shape": list(s.source_shape),
        "group_order": list(getattr(s, "group_order", wavelet.DEFAULT_GROUP_ORDER)),
        "dtype": str(t.dtype),
    })


def cmd_iwt(args):
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    root = os.path.dirname(os.path.abspath(args.manifest))
    bands = {}
    for lab in wavelet.LABELS:
        name = manifest["files"].get(lab)
        path = os.path.join(root, name) if name else None
        if not path or not os.path.exists(path):
            raise UsageError(f"missing subband file for {lab}")
        bands[lab] = load_tensor(path)
    shape = tuple(manifest["source_shape"])
    if manifest["mode"] == "multi":
        out = wavelet.multi_iwt(wavelet.MultiWTSet(bands, shape, tuple(manifest["group_order"])))
    else:
        out = wavelet.iwt3d(wavelet.SubbandSet(bands, shape))
    save_tensor(out, args.out)


def _parse_mask(spec: str):
    if spec == "fixed":
        return None
    if spec.startswith("adaptive:"):
        try:
            frac = float(spec.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad adaptive fraction in {spec!r}") from None
        if not 0 < frac <= 1:
            raise UsageError(f"adaptive fraction must lie in (0, 1], got {frac}")
        return frac
    raise UsageError(f"--mask must be 'fixed' or 'adaptive:FRACTION', got {spec!r}")


def cmd_compress(args):
    z = _load(args.input, args)
    frac = _parse_mask(args.mask)
    s = wavelet.multi_wt(z) if args.mode == "multi" else wavelet.wt3d(z)
    mask = compression.fixed_mask(args.mode) if frac is None else compression.adaptive_select(s, frac)
    compression.pack(s, mask).save(args.out)


def cmd_decompress(args):
    p = compression.PackedLatent.load(args.input)
    save_tensor(compression.decompress_latent(p), args.out)


def cmd_analyze(args):
    t = _load(args.input, args)
    s = wavelet.multi_wt(t) if args.mode == "multi" else wavelet.wt3d(t)
    if args.kind == "energy":
        report = analytics.subband_energy(s)
    else:
        report = analytics.subband_autocorr(s)
    text = report.to_csv() if args.out.endswith(".csv") else analytics.report_json(report) + "\n"
    with open(args.out, "w") as fh:
        fh.write(text)


def cmd_gen_data(args):
    with open(args.spec) as fh:
        doc = json.load(fh)
    if args.seed is not None:
        doc["seed"] = args.seed
    spec = synth.SynthSpec.from_dict(doc)
    dtype = DTYPES[args.dtype] if args.dtype else np.float32
    synth.save_dataset(synth.synth_dataset(spec, dtype=dtype), args.out_dir, spec)


def cmd_train(args):
    with open(args.config) as fh:
        doc = json.load(fh)
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = TrainConfig.from_dict(doc)
    data = synth.load_dataset(args.data_dir)
    val = synth.load_dataset(args.val_dir) if args.val_dir else None
    params, log = train(cfg, data, val)
    os.makedirs(args.out_dir, exist_ok=True)
    save_params(params, os.path.join(args.out_dir, "params"), cfg.to_dict())
    with open(os.path.join(args.out_dir, "train_log.csv"), "w") as fh:
        fh.write(log.to_csv())


def cmd_eval(args):
    params = load_params(args.params)
    clips = synth.load_dataset(args.data_dir).astype(np.float64)
    scores = evaluate(params, clips, compress=args.compression == "fixed")
    rows = [["clip", "psnr"]] + [[i, _fmt(v)] for i, v in enumerate(scores)]
    finite = scores[np.isfinite(scores)]
    mean = math.inf if finite.size == 0 else float(finite.mean())
    rows.append(["mean", _fmt(mean)])
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        csv.writer(out, lineterminator="\n").writerows(rows)
    finally:
        if args.out:
            out.close()


def _fmt(v: float) -> str:
    return "inf" if math.isinf(v) else repr(float(v))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dtype", choices=sorted(DTYPES), default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="freqlatent", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wt", parents=[common], help="wavelet-decompose an LCT1 tensor")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--mode", choices=["single", "multi"], default="multi")
    p.set_defaults(func=cmd_wt)

    p = sub.add_parser("iwt", parents=[common], help="invert a wt output directory")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_iwt)

    p = sub.add_parser("compress", parents=[common], help="LCT1 latent -> LCP1 container")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mask", default="fixed")
    p.add_argument("--mode", choices=["single", "multi"], default="multi")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", parents=[common], help="LCP1 container -> LCT1 latent")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("analyze", parents=[common], help="subband energy or autocorrelation report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--kind", choices=["energy", "autocorr"], required=True)
    p.add_argument("--out", required=True, help="*.csv for CSV, anything else for JSON")
    p.add_argument("--mode", choices=["single", "multi"], default="single")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gen-data", parents=[common], help="write a synthetic clip corpus")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", parents=[common], help="train the toy autoencoder")
    p.add_argument("--config", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--val-dir", default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="per-clip PSNR table")
    p.add_argument("--params", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--compression", choices=["none", "fixed"], default="none")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (UsageError, TensorFormatError, compression.PackFormatError, wavelet.DimensionError,
            FileNotFoundError, KeyError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TrainingDiverged, RuntimeError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
