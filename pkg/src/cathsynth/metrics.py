"""Segmentation evaluation over 3-class likelihood maps.

Catheter pixels are the positive class; background and text are negative.
Precision/recall sweeps an 8-bit threshold ladder (0..240 step 30), the
single-number F-beta score binarizes at twice the mean likelihood, and the
training objective is a class-weighted cross entropy summed over scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

CLASS_NAMES = ("bg", "catheter", "text")
BG, CATHETER, TEXT = 0, 1, 2

LOG_CLAMP = 1e-7
DEFAULT_THRESHOLDS = tuple(range(0, 241, 30))   # 9 points over 8-bit maps
DEFAULT_MIN_AREA = 64


@dataclass
class LikelihoodMap:
    """Per-class channel stack, either floats in [0, 1] or 8-bit counts."""

    channels: np.ndarray        # (3, H, W)
    eight_bit: bool = False

    def __post_init__(self):
        self.channels = np.asarray(self.channels)
        if self.channels.ndim != 3 or self.channels.shape[0] != len(CLASS_NAMES):
            raise ValueError("expected channels shaped (3, H, W)")
        if self.channels.shape[1] < 1 or self.channels.shape[2] < 1:
            raise ValueError("empty map")

    @property
    def domain_max(self) -> float:
        return 255.0 if self.eight_bit else 1.0

    def channel(self, class_id: int) -> np.ndarray:
        if not (0 <= class_id < len(CLASS_NAMES)):
            raise ValueError(f"unknown class {class_id}")
        return self.channels[class_id]

    @classmethod
    def from_probabilities(cls, channels: np.ndarray) -> "LikelihoodMap":
        m = cls(np.asarray(channels, dtype=np.float64), eight_bit=False)
        sums = m.channels.sum(axis=0)
        if np.abs(sums - 1.0).max() > 1e-4:
            raise ValueError("per-pixel channel sums must be 1 within 1e-4")
        return m


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float | None     # None flags an undefined 0/0 ratio
    recall: float | None


@dataclass
class PRCurve:
    points: list[PRPoint] = field(default_factory=list)

    def defined_points(self) -> list[PRPoint]:
        return [p for p in self.points
                if p.precision is not None and p.recall is not None]


@dataclass(frozen=True)
class FBetaConfig:
    beta_sq: float = 0.3

    def __post_init__(self):
        if self.beta_sq <= 0:
            raise ValueError("beta_sq must be positive")


@dataclass(frozen=True)
class LossWeights:
    w_bg: float = 1.0
    w_catheter: float = 40.0
    w_text: float = 80.0
    scale_count: int = 3

    def __post_init__(self):
        if min(self.w_bg, self.w_catheter, self.w_text) <= 0:
            raise ValueError("class weights must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.w_bg, self.w_catheter, self.w_text])


def binarize(lmap: LikelihoodMap, class_id: int, threshold: float) -> np.ndarray:
    """Positive wherever the class channel strictly exceeds the threshold."""
    return lmap.channel(class_id) > threshold


_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def small_region_filter(mask: np.ndarray, min_area: int) -> np.ndarray:
    """Drop 8-connected components smaller than ``min_area`` pixels."""
    if min_area < 0:
        raise ValueError("min_area must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    if min_area == 0:
        return mask.copy()
    labels, n = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if n == 0:
        return mask.copy()
    sizes = np.bincount(labels.ravel())
    keep = sizes >= min_area
    keep[0] = False
    return keep[labels]


def confusion(pred: np.ndarray, truth: np.ndarray) -> ConfusionCounts:
    """Counts with truth positives = catheter, negatives = bg and text."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("prediction/truth dimensions mismatch")
    pos = truth == CATHETER
    tp = int(np.count_nonzero(pred & pos))
    fp = int(np.count_nonzero(pred & ~pos))
    fn = int(np.count_nonzero(~pred & pos))
    tn = int(np.count_nonzero(~pred & ~pos))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def precision_recall(c: ConfusionCounts) -> tuple[float | None, float | None]:
    """Per-count ratios; a 0/0 ratio comes back as None rather than a guess."""
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else None
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None
    return precision, recall


def f_beta(precision: float, recall: float,
           cfg: FBetaConfig = FBetaConfig()) -> float:
    """Weighted harmonic mean; precision dominates for beta_sq < 1."""
    if precision == 0.0 and recall == 0.0:
        return 0.0
    b2 = cfg.beta_sq
    return (1.0 + b2) * precision * recall / (b2 * precision + recall)


def adaptive_threshold(lmap: LikelihoodMap, class_id: int = CATHETER) -> float:
    """Twice the mean of the class channel, clamped into the value domain."""
    t = 2.0 * float(lmap.channel(class_id).mean(dtype=np.float64))
    return min(t, lmap.domain_max)


def pr_curve(lmap: LikelihoodMap, truth: np.ndarray,
             thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
             min_area: int = DEFAULT_MIN_AREA) -> PRCurve:
    """Binarize -> filter small regions -> count, per threshold."""
    thresholds = list(thresholds)
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    curve = PRCurve()
    for t in thresholds:
        mask = small_region_filter(binarize(lmap, CATHETER, t), min_area)
        p, r = precision_recall(confusion(mask, truth))
        curve.points.append(PRPoint(threshold=float(t), precision=p, recall=r))
    return curve


def weighted_ce(pred: LikelihoodMap, truth: np.ndarray,
                weights: LossWeights = LossWeights()) -> float:
    """Mean over pixels of -w[class] * ln(p[class]), ln clamped at 1e-7."""
    truth = np.asarray(truth)
    if pred.channels.shape[1:] != truth.shape:
        raise ValueError("prediction/truth dimensions mismatch")
    h, w = truth.shape
    probs = np.take_along_axis(pred.channels, truth[None].astype(np.int64),
                               axis=0)[0]
    wmap = weights.as_array()[truth.astype(np.int64)]
    return float(np.mean(-wmap * np.log(np.clip(probs, LOG_CLAMP, None))))


def multiscale_loss(preds: Sequence[LikelihoodMap], truths: Sequence[np.ndarray],
                    weights: LossWeights = LossWeights()) -> float:
    """Sum of the per-scale weighted cross entropies."""
    if len(preds) != len(truths):
        raise ValueError("need one truth per scale")
    return float(sum(weighted_ce(p, t, weights) for p, t in zip(preds, truths)))


@dataclass
class ImageScore:
    name: str
    threshold: float
    precision: float | None
    recall: float | None
    f_beta: float | None
    curve: PRCurve


def score_map(lmap: LikelihoodMap, truth: np.ndarray, name: str = "",
              thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
              min_area: int = DEFAULT_MIN_AREA,
              fbeta_cfg: FBetaConfig = FBetaConfig()) -> ImageScore:
    """Adaptive-threshold P/R/F plus the full PR sweep for one image."""
    t_seg = adaptive_threshold(lmap)
    mask = small_region_filter(binarize(lmap, CATHETER, t_seg), min_area)
    p, r = precision_recall(confusion(mask, truth))
    fb = f_beta(p, r, fbeta_cfg) if (p is not None and r is not None) else None
    return ImageScore(name=name, threshold=t_seg, precision=p, recall=r,
                      f_beta=fb, curve=pr_curve(lmap, truth, thresholds, min_area))
