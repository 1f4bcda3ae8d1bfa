"""Geometric augmentation of (image, label) pairs.

One affine resampling pass applies scale, rotation, and horizontal flip
about the image center and lands on a fixed 512x512 output canvas (center
crop or zero pad).  Images interpolate bilinearly; label maps use nearest
neighbor so class ids never mix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .compose import LabeledPair, PairPlan

OUT_SIZE = 512


@dataclass(frozen=True)
class AugmentSpec:
    rotation_deg: float = 0.0
    hflip: bool = False
    scale: float = 1.0
    out_size: int = OUT_SIZE

    def __post_init__(self):
        if not (-60.0 <= self.rotation_deg <= 60.0):
            raise ValueError("rotation must lie in [-60, 60] degrees")
        if not (0.5 <= self.scale <= 1.1):
            raise ValueError("scale must lie in [0.5, 1.1]")

    @property
    def is_identity(self) -> bool:
        return self.rotation_deg == 0.0 and not self.hflip and self.scale == 1.0


IDENTITY = AugmentSpec()


def _inverse_matrix(spec: AugmentSpec) -> np.ndarray:
    """Output (y, x) -> input (y, x) linear map for scale -> rotate -> flip."""
    th = math.radians(spec.rotation_deg)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    flip = np.array([[1.0, 0.0], [0.0, -1.0 if spec.hflip else 1.0]])
    fwd = flip @ rot @ (spec.scale * np.eye(2))
    return np.linalg.inv(fwd)


def _warp(arr: np.ndarray, spec: AugmentSpec, order: int, cval: float) -> np.ndarray:
    out_size = spec.out_size
    if spec.is_identity and arr.shape == (out_size, out_size):
        return arr.copy()
    inv = _inverse_matrix(spec)
    c_in = (np.array(arr.shape, dtype=np.float64) - 1.0) / 2.0
    c_out = (np.array([out_size, out_size], dtype=np.float64) - 1.0) / 2.0
    offset = c_in - inv @ c_out
    return ndimage.affine_transform(arr, inv, offset=offset,
                                    output_shape=(out_size, out_size),
                                    order=order, mode="constant", cval=cval,
                                    prefilter=False)


def apply(pair: LabeledPair, spec: AugmentSpec) -> LabeledPair:
    """Same transform on image (bilinear) and labels (nearest), 512x512 out."""
    image = np.clip(_warp(pair.image.astype(np.float64), spec, order=1, cval=0.0),
                    0.0, 1.0)
    labels = _warp(pair.labels, spec, order=0, cval=0).astype(np.uint8)
    return LabeledPair(image=image, labels=labels, plan=pair.plan)


def sample_spec(rng: np.random.Generator, out_size: int = OUT_SIZE) -> AugmentSpec:
    """Rotation ~ U[-60, 60], flip ~ Bernoulli(1/2), scale ~ U[0.5, 1.1]."""
    return AugmentSpec(rotation_deg=float(rng.uniform(-60.0, 60.0)),
                       hflip=bool(rng.integers(0, 2)),
                       scale=float(rng.uniform(0.5, 1.1)),
                       out_size=out_size)
