"""Command line interface.

Verbs: generate, preprocess, augment, evaluate, show-profile.
Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

WORKERS_ENV = "CATHSYNTH_WORKERS"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _default_workers() -> int:
    return int(os.environ.get(WORKERS_ENV, "1"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cathsynth",
                     description="Synthetic catheter radiograph toolkit")
    sub = parser.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate", help="synthesize labeled training pairs")
    g.add_argument("--config", help="JSON generation config")
    g.add_argument("--backgrounds", help="directory of background PNGs")
    g.add_argument("--out", help="output dataset directory")
    g.add_argument("--count", type=int, default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--width", type=int, default=None)
    g.add_argument("--augment", action="store_true")
    g.add_argument("--templates", help="override text template directory")
    g.add_argument("--workers", type=int, default=_default_workers())
    g.add_argument("--from-manifest", help="regenerate from an existing manifest")

    p = sub.add_parser("preprocess", help="batch CLAHE and resizing")
    p.add_argument("--in", dest="input_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--no-clahe", action="store_true")
    p.add_argument("--tiles", type=int, nargs=2, default=(8, 8))
    p.add_argument("--clip-limit", type=float, default=2.0)
    p.add_argument("--bins", type=int, default=256)
    p.add_argument("--denoised-dir",
                   help="substitute externally denoised files by name")

    a = sub.add_parser("augment", help="batch geometric augmentation")
    a.add_argument("--dataset", required=True,
                   help="dataset directory with images/ and labels/")
    a.add_argument("--out", required=True)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--identity", action="store_true",
                   help="apply the identity spec instead of sampling")

    e = sub.add_parser("evaluate", help="score likelihood maps against labels")
    e.add_argument("--pred", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--out", help="report JSON path")
    e.add_argument("--min-area", type=int, default=64)
    e.add_argument("--thresholds", type=float, nargs="+",
                   default=list(range(0, 241, 30)))
    e.add_argument("--plot", help="write a PR curve plot PNG")

    s = sub.add_parser("show-profile",
                       help="dump cross-section, sinogram, and profile plots")
    s.add_argument("--out", required=True)
    s.add_argument("--d1", type=float, default=160.0)
    s.add_argument("--d2", type=float, default=80.0)
    s.add_argument("--c1", type=float, default=0.1)
    s.add_argument("--c2", type=float, default=1.0)
    s.add_argument("--t", type=float, default=30.0)
    s.add_argument("--plain", action="store_true", help="plain annulus tube")
    s.add_argument("--angles", type=float, nargs="+",
                   default=[0.0, 30.0, 60.0, 90.0])
    s.add_argument("--n-angles", type=int, default=180,
                   help="sinogram angle count")
    return parser


def _cmd_generate(args) -> int:
    from . import dataset

    if args.from_manifest:
        if not args.out:
            raise _UsageError("--out is required with --from-manifest")
        dataset.regenerate(args.from_manifest, args.out,
                           background_dir=args.backgrounds)
        print(f"regenerated dataset into {args.out}")
        return 0

    if args.config:
        with open(args.config) as fh:
            cfg_dict = json.load(fh)
    else:
        cfg_dict = {}
    if args.backgrounds:
        cfg_dict["background_dir"] = args.backgrounds
    if args.out:
        cfg_dict["output_dir"] = args.out
    if args.count is not None:
        cfg_dict["count"] = args.count
    if args.seed is not None:
        cfg_dict["master_seed"] = args.seed
    if args.width is not None:
        cfg_dict["image_width"] = args.width
    if args.augment:
        cfg_dict["augment_enabled"] = True
    if args.templates:
        cfg_dict["text_template_dir"] = args.templates
    if "background_dir" not in cfg_dict or "output_dir" not in cfg_dict:
        raise _UsageError("need --backgrounds and --out (or a --config)")
    config = dataset.config_from_dict(cfg_dict)
    manifest = dataset.generate(config, workers=max(1, args.workers))
    print(f"wrote {len(manifest['pairs'])} pairs to {config.output_dir}")
    return 0


def _cmd_preprocess(args) -> int:
    from .preprocess import (ClaheParams, clahe, denoise_hook, load_grayscale,
                             resize_width, save_grayscale)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = ClaheParams(tiles=tuple(args.tiles), clip_limit=args.clip_limit,
                         bins=args.bins)
    paths = sorted(Path(args.input_dir).glob("*.png"))
    if not paths:
        raise FileNotFoundError(f"no PNGs in {args.input_dir}")
    failures = 0
    for path in paths:
        try:
            img = load_grayscale(path)
            if args.denoised_dir:
                sub = Path(args.denoised_dir) / path.name
                img = denoise_hook(img, lambda _im: load_grayscale(sub))
            if args.width:
                img = resize_width(img, args.width)
            if not args.no_clahe:
                img = clahe(img, params)
            save_grayscale(out / path.name, img)
        except OSError as exc:
            failures += 1
            print(f"skipping {path.name}: {exc}", file=sys.stderr)
    print(f"preprocessed {len(paths) - failures}/{len(paths)} images into {out}")
    return 0


def _cmd_augment(args) -> int:
    from . import augment as augment_mod
    from . import seeds
    from .compose import LabeledPair, PairPlan
    from .dataset import load_label_png, save_label_png
    from .preprocess import load_grayscale, save_grayscale

    ds = Path(args.dataset)
    out = Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    images = sorted((ds / "images").glob("*.png"))
    if not images:
        raise FileNotFoundError(f"no images under {ds}")
    for i, img_path in enumerate(images):
        lab_path = ds / "labels" / (img_path.stem + "_labels.png")
        if not lab_path.exists():
            print(f"skipping {img_path.name}: no label file", file=sys.stderr)
            continue
        pair = LabeledPair(image=load_grayscale(img_path),
                           labels=load_label_png(lab_path), plan=PairPlan())
        spec = augment_mod.IDENTITY if args.identity \
            else augment_mod.sample_spec(seeds.stream(args.seed, i))
        pair = augment_mod.apply(pair, spec)
        save_grayscale(out / "images" / img_path.name, pair.image)
        save_label_png(out / "labels" / lab_path.name, pair.labels)
    print(f"augmented {len(images)} pairs into {out}")
    return 0


def _cmd_evaluate(args) -> int:
    from .dataset import evaluate

    report = evaluate(args.pred, args.truth, thresholds=args.thresholds,
                      min_area=args.min_area, curve_plot=args.plot)
    text = json.dumps(report, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    micro, macro = report["micro"], report["macro"]
    print(f"images scored: {len(report['images'])}")
    if report["unpaired"]:
        print("unpaired:", ", ".join(report["unpaired"]))
    for name, agg in (("micro", micro), ("macro", macro)):
        print(f"{name}: precision={agg['precision']} recall={agg['recall']} "
              f"f_beta={agg['f_beta']}")
    return 0


def _cmd_show_profile(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .preprocess import save_grayscale
    from .profiles import (CrossSectionSpec, TubeKind, normalize_global_max,
                           project, render_cross_section, sinogram)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kind = TubeKind.PLAIN if args.plain else TubeKind.STRIP
    spec = CrossSectionSpec(d1=args.d1, d2=args.d2, c1=args.c1, c2=args.c2,
                            t=args.t, kind=kind)
    field = render_cross_section(spec)
    save_grayscale(out / "cross_section.png", field.grid / field.grid.max())

    sino = sinogram(field, args.n_angles)
    stack = np.stack([p.samples for p in sino])
    save_grayscale(out / "sinogram.png", stack / stack.max())

    profs = normalize_global_max([project(field, a) for a in args.angles])
    fig, ax = plt.subplots(figsize=(6, 4))
    for prof in profs:
        ax.plot(prof.samples, label=f"{prof.angle:g} deg")
    ax.set_xlabel("detector bin")
    ax.set_ylabel("normalized attenuation")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "profiles.png", dpi=120)
    plt.close(fig)
    print(f"wrote cross_section.png, sinogram.png, profiles.png to {out}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "preprocess": _cmd_preprocess,
    "augment": _cmd_augment,
    "evaluate": _cmd_evaluate,
    "show-profile": _cmd_show_profile,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.verb](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, PermissionError, IsADirectoryError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
