"""Dataset generation, persistence, and batch evaluation.

``generate`` writes (image PNG, indexed label PNG) pairs plus a JSON
manifest whose per-pair plans regenerate every byte; ``evaluate`` scores
catheter likelihood maps against label maps with the PR sweep and the
adaptive-threshold F-beta, reporting both pooled and per-image averages.
"""

from __future__ import annotations

import dataclasses
import json
import multiprocessing
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from . import augment as augment_mod
from . import compose, glyphs, metrics, seeds
from .preprocess import load_grayscale, resize_width, save_grayscale

TOOLKIT_VERSION = "0.1.0"

LABEL_PALETTE = [0, 0, 0, 255, 64, 64, 64, 128, 255] + [0] * (256 * 3 - 9)


@dataclass(frozen=True)
class GenerationConfig:
    background_dir: str
    output_dir: str
    count: int = 10
    master_seed: int = 0
    image_width: int = 512
    augment_enabled: bool = False
    text_template_dir: str | None = None
    compose: compose.ComposeConfig = compose.ComposeConfig()

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.image_width < 64:
            raise ValueError("image_width must be >= 64")
        lo, hi = self.compose.weight_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError("weight range must be within [0, 1]")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for ct in d["compose"]["types"]:
            ct["kind"] = ct["kind"].value
        d["compose"]["cross_section"]["kind"] = \
            d["compose"]["cross_section"]["kind"].value
        return d


def config_from_dict(d: dict) -> GenerationConfig:
    d = json.loads(json.dumps(d))  # deep copy
    comp = d.pop("compose", None)
    if comp is not None:
        from .profiles import CrossSectionSpec, TubeKind
        from .preprocess import ClaheParams
        types = tuple(
            compose.CatheterType(name=t["name"], kind=TubeKind(t["kind"]),
                                 width=t["width"], angles=tuple(t["angles"]))
            for t in comp.pop("types"))
        cs = comp.pop("cross_section")
        cs = CrossSectionSpec(d1=cs["d1"], d2=cs["d2"], c1=cs["c1"], c2=cs["c2"],
                              t=cs["t"], kind=TubeKind(cs["kind"]))
        raw_clahe = comp.pop("clahe_params", None)
        clahe_params = ClaheParams() if raw_clahe is None else ClaheParams(
            tiles=tuple(raw_clahe["tiles"]), clip_limit=raw_clahe["clip_limit"],
            bins=raw_clahe["bins"])
        cc = compose.ComposeConfig(
            types=types, cross_section=cs, clahe_params=clahe_params,
            catheter_count=tuple(comp["catheter_count"]),
            ctrl_point_count=tuple(comp["ctrl_point_count"]),
            spline_degree=comp["spline_degree"],
            weight_range=tuple(comp["weight_range"]),
            text_count=tuple(comp["text_count"]),
            text_scale_range=tuple(comp["text_scale_range"]),
            arc_step=comp["arc_step"])
    else:
        cc = compose.ComposeConfig()
    return GenerationConfig(compose=cc, **d)


def save_label_png(path: str | Path, labels: np.ndarray) -> None:
    img = Image.fromarray(labels.astype(np.uint8), mode="P")
    img.putpalette(LABEL_PALETTE)
    img.save(path)


def load_label_png(path: str | Path) -> np.ndarray:
    img = Image.open(path)
    if img.mode != "P":
        img = img.convert("L")
    return np.asarray(img, dtype=np.uint8)


def _load_templates(template_dir: str | None) -> list[np.ndarray]:
    if template_dir is None:
        return glyphs.default_templates()
    paths = sorted(Path(template_dir).glob("*.png"))
    if not paths:
        raise FileNotFoundError(f"no PNG templates in {template_dir}")
    return [load_grayscale(p) for p in paths]


def _list_backgrounds(background_dir: str) -> list[Path]:
    paths = sorted(Path(background_dir).glob("*.png"))
    if not paths:
        raise FileNotFoundError(f"no PNG backgrounds in {background_dir}")
    return paths


def _make_pair(index: int, config: GenerationConfig, backgrounds: list[Path],
               templates: list[np.ndarray]) -> dict:
    """Synthesize pair ``index`` from its own stream and write both PNGs."""
    rng = seeds.stream(config.master_seed, index)
    bg_index = int(rng.integers(0, len(backgrounds)))
    bg_path = backgrounds[bg_index]
    background = resize_width(load_grayscale(bg_path), config.image_width)

    plan = compose.draw_plan(rng, background.shape, config.compose, templates)
    pair = compose.realize_plan(background, plan, config.compose, templates)
    aug_spec = None
    if config.augment_enabled:
        aug_spec = augment_mod.sample_spec(rng)
        pair = augment_mod.apply(pair, aug_spec)

    out = Path(config.output_dir)
    image_name = f"pair_{index:05d}.png"
    label_name = f"pair_{index:05d}_labels.png"
    save_grayscale(out / "images" / image_name, pair.image)
    save_label_png(out / "labels" / label_name, pair.labels)
    record = {
        "index": index,
        "seed": seeds.pair_seed(config.master_seed, index),
        "background": bg_path.name,
        "image": f"images/{image_name}",
        "labels": f"labels/{label_name}",
        "plan": plan.to_dict(),
    }
    if aug_spec is not None:
        record["augment"] = {"rotation_deg": aug_spec.rotation_deg,
                             "hflip": aug_spec.hflip, "scale": aug_spec.scale,
                             "out_size": aug_spec.out_size}
    return record


_WORKER_STATE: dict = {}


def _worker_init(config_dict: dict):
    config = config_from_dict(config_dict)
    _WORKER_STATE["config"] = config
    _WORKER_STATE["backgrounds"] = _list_backgrounds(config.background_dir)
    _WORKER_STATE["templates"] = _load_templates(config.text_template_dir)


def _worker_make(index: int) -> dict:
    return _make_pair(index, _WORKER_STATE["config"],
                      _WORKER_STATE["backgrounds"], _WORKER_STATE["templates"])


def generate(config: GenerationConfig, workers: int = 1) -> dict:
    """Write ``count`` labeled pairs and return the manifest."""
    backgrounds = _list_backgrounds(config.background_dir)
    templates = _load_templates(config.text_template_dir)
    out = Path(config.output_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)

    indices = list(range(config.count))
    if workers <= 1:
        records = [_make_pair(i, config, backgrounds, templates) for i in indices]
    else:
        method = "fork" if "fork" in multiprocessing.get_all_start_methods() \
            else "spawn"
        with multiprocessing.get_context(method).Pool(
                workers, initializer=_worker_init,
                initargs=(config.to_dict(),)) as pool:
            records = pool.map(_worker_make, indices)
    records.sort(key=lambda r: r["index"])
    manifest = {
        "toolkit_version": TOOLKIT_VERSION,
        "config": config.to_dict(),
        "pairs": records,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return manifest


def regenerate(manifest_path: str | Path, output_dir: str | Path,
               background_dir: str | None = None) -> dict:
    """Rebuild every pair of a manifest bit-exactly from its recorded plan."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    config = config_from_dict(manifest["config"])
    bg_dir = Path(background_dir or config.background_dir)
    templates = _load_templates(config.text_template_dir)
    out = Path(output_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    for rec in manifest["pairs"]:
        background = resize_width(load_grayscale(bg_dir / rec["background"]),
                                  config.image_width)
        plan = compose.PairPlan.from_dict(rec["plan"])
        pair = compose.realize_plan(background, plan, config.compose, templates)
        if "augment" in rec:
            a = rec["augment"]
            pair = augment_mod.apply(pair, augment_mod.AugmentSpec(
                rotation_deg=a["rotation_deg"], hflip=a["hflip"],
                scale=a["scale"], out_size=a["out_size"]))
        save_grayscale(out / rec["image"], pair.image)
        save_label_png(out / rec["labels"], pair.labels)
    return manifest


def _pool_counts(counts: list[metrics.ConfusionCounts]) -> metrics.ConfusionCounts:
    return metrics.ConfusionCounts(tp=sum(c.tp for c in counts),
                                   fp=sum(c.fp for c in counts),
                                   fn=sum(c.fn for c in counts),
                                   tn=sum(c.tn for c in counts))


def evaluate(pred_dir: str | Path, truth_dir: str | Path,
             thresholds: Sequence[float] = metrics.DEFAULT_THRESHOLDS,
             min_area: int = metrics.DEFAULT_MIN_AREA,
             curve_plot: str | Path | None = None) -> dict:
    """Score catheter likelihood PNGs against matching label PNGs.

    Predictions are 8-bit grayscale catheter-channel maps paired to truths
    by shared file stem (the truth's trailing "_labels" is ignored).
    Unpaired files are listed in the report and skipped.
    """
    thresholds = [float(t) for t in thresholds]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    pred_dir, truth_dir = Path(pred_dir), Path(truth_dir)
    preds = {p.stem: p for p in sorted(pred_dir.glob("*.png"))}
    truths = {p.stem.removesuffix("_labels"): p
              for p in sorted(truth_dir.glob("*.png"))}
    names = sorted(set(preds) & set(truths))
    unpaired = sorted(set(preds) ^ set(truths))

    per_image = []
    pooled_thr: dict[float, list[metrics.ConfusionCounts]] = {
        float(t): [] for t in thresholds}
    pooled_adaptive: list[metrics.ConfusionCounts] = []
    for name in names:
        chan = np.asarray(Image.open(preds[name]).convert("L"), dtype=np.float64)
        truth = load_label_png(truths[name])
        if chan.shape != truth.shape:
            unpaired.append(name)
            continue
        lmap = metrics.LikelihoodMap(
            np.stack([255.0 - chan, chan, np.zeros_like(chan)]), eight_bit=True)
        score = metrics.score_map(lmap, truth, name=name,
                                  thresholds=thresholds, min_area=min_area)
        per_image.append(score)
        for pt in score.curve.points:
            mask = metrics.small_region_filter(
                metrics.binarize(lmap, metrics.CATHETER, pt.threshold), min_area)
            pooled_thr[pt.threshold].append(metrics.confusion(mask, truth))
        mask = metrics.small_region_filter(
            metrics.binarize(lmap, metrics.CATHETER, score.threshold), min_area)
        pooled_adaptive.append(metrics.confusion(mask, truth))

    micro_curve = []
    for t in thresholds:
        counts = pooled_thr[float(t)]
        if not counts:
            continue
        p, r = metrics.precision_recall(_pool_counts(counts))
        micro_curve.append({"threshold": float(t), "precision": p, "recall": r})

    def _macro(vals):
        vals = [v for v in vals if v is not None]
        return float(np.mean(vals)) if vals else None

    micro = metrics.precision_recall(_pool_counts(pooled_adaptive)) \
        if pooled_adaptive else (None, None)
    report = {
        "images": [{
            "name": s.name, "adaptive_threshold": s.threshold,
            "precision": s.precision, "recall": s.recall, "f_beta": s.f_beta,
            "curve": [{"threshold": p.threshold, "precision": p.precision,
                       "recall": p.recall} for p in s.curve.points],
        } for s in per_image],
        "macro": {
            "precision": _macro([s.precision for s in per_image]),
            "recall": _macro([s.recall for s in per_image]),
            "f_beta": _macro([s.f_beta for s in per_image]),
        },
        "micro": {
            "precision": micro[0],
            "recall": micro[1],
            "f_beta": metrics.f_beta(micro[0], micro[1])
            if micro[0] is not None and micro[1] is not None else None,
            "curve": micro_curve,
        },
        "unpaired": unpaired,
    }
    if curve_plot is not None:
        _plot_curves(report, curve_plot)
    return report


def _plot_curves(report: dict, path: str | Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 5))
    pts = [(c["recall"], c["precision"]) for c in report["micro"]["curve"]
           if c["recall"] is not None and c["precision"] is not None]
    if pts:
        rs, ps = zip(*pts)
        ax.plot(rs, ps, "o-", label="pooled")
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.grid(True, linestyle="--", alpha=0.5)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
