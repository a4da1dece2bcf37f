"""Command line entry point: synth, degrade, train, eval, report, compare.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def cmd_synth(a):
    from .data import synth_dataset

    paths = synth_dataset(a.n, a.size, a.seed, a.out)
    print(f"wrote {len(paths)} images to {a.out}")


def cmd_degrade(a):
    from .degrade import DegradationSpec, degrade_random
    from .pngio import read_png, write_png

    spec = DegradationSpec.load(a.spec) if a.spec else DegradationSpec()
    if a.seed is not None:
        spec.seed = a.seed
    spec.validate()
    if not os.path.isdir(a.input):
        raise UsageError(f"input directory {a.input} does not exist")
    names = sorted(f for f in os.listdir(a.input) if f.lower().endswith(".png"))
    if not names:
        raise UsageError(f"no PNG images in {a.input}")
    os.makedirs(a.output, exist_ok=True)
    for idx, name in enumerate(names):
        img, rec = degrade_random(read_png(os.path.join(a.input, name)), spec, idx)
        write_png(os.path.join(a.output, name), img)
        with open(os.path.join(a.output, os.path.splitext(name)[0] + ".json"), "w") as f:
            json.dump({"source": name, **rec.to_dict()}, f, indent=1)
    with open(os.path.join(a.output, "degradation_spec.json"), "w") as f:
        json.dump(spec.to_dict(), f, indent=1)
    print(f"degraded {len(names)} images into {a.output} (seed {spec.seed})")


def _manifest_for(data_dir, val_fraction, seed):
    from .data import MANIFEST, Manifest, build_manifest

    path = os.path.join(data_dir, MANIFEST)
    if os.path.exists(path):
        return Manifest.load(path)
    clean, degraded = os.path.join(data_dir, "clean"), os.path.join(data_dir, "degraded")
    if not (os.path.isdir(clean) and os.path.isdir(degraded)):
        raise UsageError(f"{data_dir} needs clean/ and degraded/ subdirectories")
    man = build_manifest(clean, degraded, val_fraction, seed, root=data_dir)
    man.save(path)
    return man


def cmd_train(a):
    from .train import TrainConfig, train

    cfg = TrainConfig.load(a.config) if a.config else TrainConfig()
    if a.mode:
        cfg.mode = a.mode
    if a.epochs is not None:
        cfg.epochs = a.epochs
    cfg.validate()
    man = _manifest_for(a.data, cfg.val_fraction, cfg.data_seed)
    rows = train(cfg, man, a.out, overwrite=a.overwrite)
    last = rows[-1]
    print(f"trained {len(rows)} epochs ({cfg.mode}); final loss_d {last['loss_d']:.4f} "
          f"loss_g {last['loss_g']:.4f}; run directory {a.out}")


def _load_png_dir(d):
    from .data import to_model_range
    from .pngio import read_png

    names = sorted(f for f in os.listdir(d) if f.lower().endswith(".png"))
    if len(names) < 2:
        raise UsageError(f"{d} needs at least 2 PNG images")
    return np.stack([to_model_range(read_png(os.path.join(d, n))) for n in names])


def cmd_eval_fid(a):
    from .fid import (FeatureExtractorSpec, extract_features, frechet_distance, gaussian_stats,
                      load_features_csv, save_features_csv)

    kind = {"proxy": "proxy", "flatten": "flatten", "file": "file"}[a.extractor]
    spec = FeatureExtractorSpec(kind, a.seed)
    if kind == "file":
        fr, ff = load_features_csv(a.real), load_features_csv(a.fake)
    else:
        fr = extract_features(_load_png_dir(a.real), spec)
        ff = extract_features(_load_png_dir(a.fake), spec)
    if a.export_real:
        save_features_csv(a.export_real, fr)
    if a.export_fake:
        save_features_csv(a.export_fake, ff)
    d = frechet_distance(gaussian_stats(fr), gaussian_stats(ff))
    note = " (N < D: covariance rank deficient)" if min(len(fr), len(ff)) < fr.shape[1] else ""
    print(f"FID[{kind}, seed {a.seed}, D={fr.shape[1]}, N={len(fr)}/{len(ff)}]: {d:.6f}{note}")


def cmd_eval_run(a):
    from .data import Manifest
    from .fid import FeatureExtractorSpec
    from .train import TrainConfig, evaluate

    cfg = TrainConfig.load_run(a.run)
    ck = a.checkpoint
    if ck in ("best", "final"):
        ck = os.path.join(a.run, "checkpoints", f"generator_{ck}.gbck")
    data = a.data
    if data is None:
        raise UsageError("--data is required to locate the validation split")
    man = Manifest.load(data)
    spec = FeatureExtractorSpec(cfg.fid_extractor, cfg.fid_seed if a.seed is None else a.seed)
    res = evaluate(ck, man, spec, cfg=cfg)
    res["checkpoint"] = ck
    with open(os.path.join(a.run, "eval.json"), "w") as f:
        json.dump(res, f, indent=2)
    print(f"FID {res['fid']:.6f}  L1 mean {res['l1_mean']:.5f} median {res['l1_median']:.5f} "
          f"max {res['l1_max']:.5f}  (n={res['n']}, {ck})")


def cmd_report(a):
    from .report import report

    print(report(a.run), end="")


def cmd_compare(a):
    from .report import compare

    runs = [r.split(",") for r in a.runs]
    text, _ = compare(runs[0], runs[1], labels=tuple(a.labels))
    if a.out:
        with open(a.out, "w") as f:
            f.write(text)
    print(text, end="")


def build_parser():
    p = _Parser(prog="ganbal", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate procedural clean images")
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--size", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("degrade", help="apply the seeded degradation pipeline")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--spec", default=None, help="JSON degradation spec")
    s.set_defaults(func=cmd_degrade)

    s = sub.add_parser("train", help="train a baseline or adaptive run")
    s.add_argument("--data", required=True)
    s.add_argument("--config", default=None)
    s.add_argument("--mode", choices=["baseline", "adaptive"], default=None)
    s.add_argument("--out", required=True)
    s.add_argument("--epochs", type=int, default=None)
    s.add_argument("--overwrite", action="store_true")
    s.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluation commands")
    esub = e.add_subparsers(dest="eval_command", required=True, parser_class=_Parser)
    s = esub.add_parser("fid", help="proxy FID between two image sets")
    s.add_argument("--real", required=True)
    s.add_argument("--fake", required=True)
    s.add_argument("--extractor", choices=["proxy", "flatten", "file"], default="proxy",
                   help="with 'file', --real/--fake are feature CSVs")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--export-real", default=None)
    s.add_argument("--export-fake", default=None)
    s.set_defaults(func=cmd_eval_fid)
    s = esub.add_parser("run", help="score a trained generator checkpoint")
    s.add_argument("--run", required=True)
    s.add_argument("--data", default=None)
    s.add_argument("--checkpoint", default="final", help="best, final or a .gbck path")
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_eval_run)

    s = sub.add_parser("report", help="render plots and a summary for a run")
    s.add_argument("--run", required=True)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("compare", help="compare two runs (comma-separated lists give medians)")
    s.add_argument("--runs", nargs=2, required=True, metavar=("A", "B"))
    s.add_argument("--labels", nargs=2, default=["A", "B"])
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    p = build_parser()
    a = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        a.func(a)
    except UsageError as e:
        print(f"ganbal: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError, KeyError) as e:
        print(f"ganbal: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
