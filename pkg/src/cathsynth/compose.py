"""Compositing of catheter ink and marker text onto radiograph backgrounds.

``synthesize_pair`` is split into a random *plan* (every decision drawn from
the caller's stream) and a deterministic *realization*, so a recorded plan
regenerates its training pair bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np
from PIL import Image

from . import glyphs
from .preprocess import clahe, ClaheParams
from .profiles import (CrossSectionSpec, TubeKind, render_cross_section, project,
                       resample_profile, normalize_global_max, ProjectionProfile)
from .raster import IntensityLayer, LayerRole, stroke_path, stroke_label
from .splines import SplineSpec, clamped_uniform_knots, flatten, random_path

BG, CATHETER, TEXT = 0, 1, 2


@dataclass(frozen=True)
class CatheterType:
    name: str
    kind: TubeKind
    width: int                   # brush support width in image pixels
    angles: tuple[float, ...]    # candidate projection angles for the brush


DEFAULT_TYPES = (
    CatheterType("NGT", TubeKind.STRIP, 9, (0.0, 30.0, 60.0, 90.0)),
    CatheterType("ETT", TubeKind.STRIP, 9, (0.0, 30.0, 60.0, 90.0)),
    CatheterType("UAC", TubeKind.PLAIN, 6, (0.0,)),
    CatheterType("UVC", TubeKind.PLAIN, 6, (0.0,)),
)


@dataclass(frozen=True)
class ComposeConfig:
    types: tuple[CatheterType, ...] = DEFAULT_TYPES
    catheter_count: tuple[int, int] = (1, 4)
    ctrl_point_count: tuple[int, int] = (4, 8)
    spline_degree: int = 3
    weight_range: tuple[float, float] = (0.15, 0.35)
    text_count: tuple[int, int] = (1, 3)
    text_scale_range: tuple[float, float] = (0.6, 1.6)
    cross_section: CrossSectionSpec = CrossSectionSpec()
    arc_step: float = 0.5
    clahe_params: ClaheParams = ClaheParams()

    def type_named(self, name: str) -> CatheterType:
        for t in self.types:
            if t.name == name:
                return t
        raise KeyError(f"unknown catheter type {name!r}")


@dataclass
class CatheterPlan:
    type_name: str
    angle: float
    weight: float
    degree: int
    control_points: list[list[float]]


@dataclass
class TextPlan:
    template_index: int
    scale: float
    x: int
    y: int
    weight: float


@dataclass
class PairPlan:
    catheters: list[CatheterPlan] = field(default_factory=list)
    texts: list[TextPlan] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PairPlan":
        return cls(catheters=[CatheterPlan(**c) for c in d["catheters"]],
                   texts=[TextPlan(**t) for t in d["texts"]])


@dataclass
class LabeledPair:
    image: np.ndarray           # float64 in [0, 1]
    labels: np.ndarray          # uint8 in {0, 1, 2}
    plan: PairPlan


_BRUSH_CACHE: dict[tuple, np.ndarray] = {}


def tube_brush(section: CrossSectionSpec, kind: TubeKind, angle: float,
               width: int) -> ProjectionProfile:
    """Normalized brush profile for one catheter type at one angle."""
    key = (section, kind, angle, width)
    if key not in _BRUSH_CACHE:
        sec = CrossSectionSpec(d1=section.d1, d2=section.d2, c1=section.c1,
                               c2=section.c2, t=section.t, kind=kind)
        fld = render_cross_section(sec)
        prof = resample_profile(project(fld, angle), width)
        _BRUSH_CACHE[key] = normalize_global_max([prof])[0].samples
    return ProjectionProfile(_BRUSH_CACHE[key].copy(), angle)


def composite_catheters(background: np.ndarray,
                        layers: Sequence[tuple[IntensityLayer, float]]) -> np.ndarray:
    """Weighted additive blend of ink layers, clamped to [0, 1]."""
    out = np.asarray(background, dtype=np.float64).copy()
    for layer, weight in layers:
        if layer.grid.shape != out.shape:
            raise ValueError("layer dimensions must match the background")
        if not (0.0 <= weight <= 1.0):
            raise ValueError("weight must lie in [0, 1]")
        out += weight * layer.grid
    return np.clip(out, 0.0, 1.0)


def _scaled_template(template: np.ndarray, scale: float,
                     limit: tuple[int, int]) -> np.ndarray:
    h, w = template.shape
    # shrink further if the scaled template would not fit the image
    fit = min(limit[0] / h, limit[1] / w)
    scale = min(scale, fit)
    nh, nw = max(1, round(h * scale)), max(1, round(w * scale))
    pil = Image.fromarray(template.astype(np.float32), mode="F")
    out = np.asarray(pil.resize((nw, nh), Image.BILINEAR), dtype=np.float64)
    return np.clip(out, 0.0, 1.0)


def draw_text_plans(rng: np.random.Generator, templates: Sequence[np.ndarray],
                    shape: tuple[int, int], config: ComposeConfig,
                    count: int | None = None) -> list[TextPlan]:
    """Random template choices and non-overlapping placements."""
    if count is None:
        lo, hi = config.text_count
        count = int(rng.integers(lo, hi + 1))
    if count == 0:
        return []
    if not templates:
        raise ValueError("need at least one text template")
    h, w = shape
    plans: list[TextPlan] = []
    boxes: list[tuple[int, int, int, int]] = []
    for _ in range(count):
        ti = int(rng.integers(0, len(templates)))
        scale = float(rng.uniform(*config.text_scale_range))
        scaled = _scaled_template(templates[ti], scale, (h, w))
        th, tw = scaled.shape
        for _attempt in range(50):
            x = int(rng.integers(0, w - tw + 1))
            y = int(rng.integers(0, h - th + 1))
            if all(x + tw <= bx or bx + bw <= x or y + th <= by or bh + by <= y
                   for bx, by, bw, bh in boxes):
                break
        boxes.append((x, y, tw, th))
        weight = float(rng.uniform(*config.weight_range))
        plans.append(TextPlan(template_index=ti, scale=scale, x=x, y=y,
                              weight=weight))
    return plans


def apply_text_plans(background: np.ndarray, templates: Sequence[np.ndarray],
                     plans: Sequence[TextPlan],
                     config: ComposeConfig) -> tuple[np.ndarray, np.ndarray]:
    """Blend planned templates in; returns (image, binary text mask)."""
    out = np.asarray(background, dtype=np.float64).copy()
    mask = np.zeros(out.shape, dtype=bool)
    h, w = out.shape
    for plan in plans:
        scaled = _scaled_template(templates[plan.template_index], plan.scale, (h, w))
        th, tw = scaled.shape
        region = (slice(plan.y, plan.y + th), slice(plan.x, plan.x + tw))
        out[region] += plan.weight * scaled
        mask[region] |= scaled > 0.1
    return np.clip(out, 0.0, 1.0), mask


def composite_text(background: np.ndarray, templates: Sequence[np.ndarray],
                   rng: np.random.Generator,
                   config: ComposeConfig = ComposeConfig(),
                   count: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Scale and merge 1-3 text templates at random spots; see draw/apply."""
    if count == 0 or (count is None and not templates):
        return np.asarray(background, dtype=np.float64).copy(), \
            np.zeros(np.asarray(background).shape, dtype=bool)
    plans = draw_text_plans(rng, templates, background.shape, config, count)
    return apply_text_plans(background, templates, plans, config)


def build_label_map(catheter_layers: Sequence[IntensityLayer],
                    text_mask: np.ndarray | None,
                    shape: tuple[int, int] | None = None) -> np.ndarray:
    """Per-pixel classes with priority catheter > text > background."""
    if shape is None:
        if catheter_layers:
            shape = catheter_layers[0].grid.shape
        elif text_mask is not None:
            shape = text_mask.shape
        else:
            raise ValueError("cannot infer label map shape")
    labels = np.zeros(shape, dtype=np.uint8)
    if text_mask is not None:
        if text_mask.shape != shape:
            raise ValueError("text mask dimensions mismatch")
        labels[text_mask.astype(bool)] = TEXT
    for layer in catheter_layers:
        if layer.grid.shape != shape:
            raise ValueError("label layer dimensions mismatch")
        labels[layer.grid > 0.5] = CATHETER
    return labels


def draw_plan(rng: np.random.Generator, shape: tuple[int, int],
              config: ComposeConfig = ComposeConfig(),
              templates: Sequence[np.ndarray] | None = None,
              catheter_count: int | None = None,
              text_count: int | None = None) -> PairPlan:
    """Draw every random decision for one synthetic pair from the stream."""
    h, w = shape
    if catheter_count is None:
        lo, hi = config.catheter_count
        catheter_count = int(rng.integers(lo, hi + 1))
    catheters = []
    for _ in range(catheter_count):
        ctype = config.types[int(rng.integers(0, len(config.types)))]
        angle = float(ctype.angles[int(rng.integers(0, len(ctype.angles)))])
        n_ctrl = int(rng.integers(config.ctrl_point_count[0],
                                  config.ctrl_point_count[1] + 1))
        spec = random_path(rng, (w, h), n_ctrl, config.spline_degree)
        weight = float(rng.uniform(*config.weight_range))
        catheters.append(CatheterPlan(type_name=ctype.name, angle=angle,
                                      weight=weight, degree=spec.degree,
                                      control_points=spec.control_points.tolist()))
    if templates is None:
        templates = glyphs.default_templates()
    texts = [] if text_count == 0 else draw_text_plans(
        rng, templates, shape, config, text_count)
    return PairPlan(catheters=catheters, texts=texts)


def realize_plan(background: np.ndarray, plan: PairPlan,
                 config: ComposeConfig = ComposeConfig(),
                 templates: Sequence[np.ndarray] | None = None,
                 normalize_background: bool = True) -> LabeledPair:
    """Deterministically composite a plan onto a background."""
    if templates is None:
        templates = glyphs.default_templates()
    base = np.asarray(background, dtype=np.float64)
    if normalize_background:
        base = clahe(base, config.clahe_params)
    h, w = base.shape

    ink_layers: list[tuple[IntensityLayer, float]] = []
    label_layers: list[IntensityLayer] = []
    for cath in plan.catheters:
        ctype = config.type_named(cath.type_name)
        pts = np.asarray(cath.control_points, dtype=np.float64)
        spec = SplineSpec(degree=cath.degree, control_points=pts,
                          knots=clamped_uniform_knots(len(pts), cath.degree))
        path = flatten(spec, config.arc_step)
        if len(path) == 0:
            continue
        brush = tube_brush(config.cross_section, ctype.kind, cath.angle, ctype.width)
        ink = IntensityLayer.blank(h, w, LayerRole.CATHETER_INK)
        stroke_path(path, brush, ink)
        lab = IntensityLayer.blank(h, w, LayerRole.LABEL_INK)
        stroke_label(path, ctype.width, lab)
        ink_layers.append((ink, cath.weight))
        label_layers.append(lab)

    image = composite_catheters(base, ink_layers)
    image, text_mask = apply_text_plans(image, templates, plan.texts, config)
    labels = build_label_map(label_layers, text_mask, shape=(h, w))
    return LabeledPair(image=image, labels=labels, plan=plan)


def synthesize_pair(background: np.ndarray, rng: np.random.Generator,
                    config: ComposeConfig = ComposeConfig(),
                    templates: Sequence[np.ndarray] | None = None,
                    catheter_count: int | None = None,
                    text_count: int | None = None) -> LabeledPair:
    """Draw a plan and realize it; the stream fully determines the output."""
    plan = draw_plan(rng, np.asarray(background).shape, config, templates,
                     catheter_count, text_count)
    return realize_plan(background, plan, config, templates)
