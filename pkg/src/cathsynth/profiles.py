"""Tube cross-sections and their parallel-beam projection profiles.

A tube cross-section is an annulus (outer diameter ``d1``, inner diameter
``d2``) of attenuation ``c1``, optionally carrying a high-attenuation strip
of thickness ``t`` and attenuation ``c2`` embedded in the wall.  Projecting
the rendered section at some angle yields the 1D intensity profile that is
later swept along a spline path to paint a tube on an image.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np


class TubeKind(enum.Enum):
    STRIP = "strip"   # annulus with a radiopaque strip in the wall
    PLAIN = "plain"   # bare annulus, projects to a dual-edge profile


class Normalization(enum.Enum):
    RAW = "raw"
    GLOBAL_MAX = "global_max"


@dataclass(frozen=True)
class CrossSectionSpec:
    """Physical parameters of a tube cross-section, in section pixels."""

    d1: float = 160.0
    d2: float = 80.0
    c1: float = 0.1
    c2: float = 1.0
    t: float = 30.0
    kind: TubeKind = TubeKind.STRIP

    def __post_init__(self):
        if not (self.d1 > self.d2 > 0):
            raise ValueError(f"require d1 > d2 > 0, got d1={self.d1}, d2={self.d2}")
        if not (0 < self.t <= self.d2):
            raise ValueError(f"require 0 < t <= d2, got t={self.t}, d2={self.d2}")
        if not (0 <= self.c1 <= self.c2):
            raise ValueError(f"require 0 <= c1 <= c2, got c1={self.c1}, c2={self.c2}")


@dataclass
class DensityField:
    """Rendered cross-section: square grid of attenuation values, pitch 1."""

    grid: np.ndarray
    spec: CrossSectionSpec

    @property
    def side(self) -> int:
        return self.grid.shape[0]


@dataclass
class ProjectionProfile:
    """1D attenuation profile of a field projected at a fixed angle."""

    samples: np.ndarray
    angle: float
    normalization: Normalization = Normalization.RAW

    def support(self, rel_eps: float = 1e-9) -> tuple[int, int]:
        """(first, last) index of the nonzero region, inclusive."""
        peak = float(self.samples.max(initial=0.0))
        if peak <= 0.0:
            raise ValueError("profile has empty support")
        idx = np.flatnonzero(self.samples > rel_eps * peak)
        return int(idx[0]), int(idx[-1])


_SUBSAMPLES = 8  # per-axis subpixel count for boundary antialiasing


def render_cross_section(spec: CrossSectionSpec, grid_side: int | None = None) -> DensityField:
    """Render the attenuation map of a tube section on a square grid.

    Boundary pixels are area-weighted by 8x8 subsampling so that projections
    do not depend on how region edges land on the pixel grid.
    """
    min_side = int(math.ceil(spec.d1)) + 2
    if grid_side is None:
        grid_side = min_side
    if grid_side < min_side:
        raise ValueError(f"grid_side {grid_side} too small; need at least {min_side}")

    c = (grid_side - 1) / 2.0
    # subpixel center offsets within one pixel
    sub = (np.arange(_SUBSAMPLES) + 0.5) / _SUBSAMPLES - 0.5
    coords = np.arange(grid_side) - c
    # x[j] + sub -> shape (side, S); same for y
    xs = coords[:, None] + sub[None, :]
    ys = coords[:, None] + sub[None, :]

    r1 = spec.d1 / 2.0
    r2 = spec.d2 / 2.0
    # evaluate membership on the full subsampled lattice, then average the
    # coverage fractions back so that fully covered pixels get exactly c1/c2
    X = xs[None, :, None, :]                  # (1, side, 1, S)
    Y = ys[:, None, :, None]                  # (side, 1, S, 1)
    rr = X * X + Y * Y
    wall = (rr <= r1 * r1) & (rr >= r2 * r2)
    if spec.kind is TubeKind.STRIP:
        strip = wall & (X >= -r1) & (X <= -r2) & (np.abs(Y) <= spec.t / 2.0)
        wall = wall & ~strip
        strip_cov = strip.mean(axis=(2, 3), dtype=np.float64)
    else:
        strip_cov = 0.0
    wall_cov = wall.mean(axis=(2, 3), dtype=np.float64)
    grid = spec.c1 * wall_cov + spec.c2 * strip_cov
    return DensityField(grid=grid, spec=spec)


def _detector_bin_count(side: int) -> int:
    """Bins spanning the grid diagonal, parity-matched to the pixel grid.

    Matching parity keeps detector bin centers aligned with pixel centers at
    axis-parallel angles, so 0/90 degree projections are exact column sums.
    """
    n = int(math.ceil(side * math.sqrt(2.0)))
    if (n - side) % 2 != 0:
        n += 1
    return n


def project(field: DensityField, angle_deg: float) -> ProjectionProfile:
    """Line-integral projection of the field at one angle (unit-width bins).

    At 0 degrees rays travel along +y and detector bins run along +x; the
    angle rotates the detector axis clockwise onto -y at 90 degrees.  Each
    sample is the exact integral of the pixelated field along the ray through
    the bin center, computed from the trapezoidal footprint a unit square
    leaves on the detector axis.
    """
    if not (0.0 <= angle_deg < 180.0):
        raise ValueError(f"angle must be in [0, 180), got {angle_deg}")
    grid = field.grid
    side = grid.shape[0]
    n_bins = _detector_bin_count(side)
    c = (side - 1) / 2.0
    half = (n_bins - 1) / 2.0

    theta = math.radians(angle_deg)
    vx, vy = math.cos(theta), -math.sin(theta)   # detector axis
    a, b = abs(vx), abs(vy)
    hi, lo = max(a, b), min(a, b)

    ys, xs = np.nonzero(grid)
    vals = grid[ys, xs]
    # detector coordinate of each pixel center, in bin units from bin 0
    q = (xs - c) * vx + (ys - c) * vy + half

    out = np.zeros(n_bins)
    j0 = np.floor(q).astype(np.int64)
    for k in (-1, 0, 1):
        j = j0 + k
        delta = np.abs(q - j)
        if lo < 1e-12:
            w = np.where(delta < 0.5, 1.0 / hi, 0.0)
        else:
            plateau = (hi - lo) / 2.0
            foot = (hi + lo) / 2.0
            ramp = (foot - delta) / (hi * lo)
            w = np.where(delta <= plateau, 1.0 / hi, np.clip(ramp, 0.0, None))
        ok = (j >= 0) & (j < n_bins)
        out += np.bincount(j[ok], weights=(vals * w)[ok], minlength=n_bins)
    return ProjectionProfile(samples=out, angle=angle_deg, normalization=Normalization.RAW)


def sinogram(field: DensityField, n_angles: int) -> list[ProjectionProfile]:
    """Projections at ``i * 180 / n_angles`` for i in 0..n_angles-1."""
    if n_angles < 1:
        raise ValueError("n_angles must be >= 1")
    return [project(field, i * 180.0 / n_angles) for i in range(n_angles)]


def normalize_global_max(profiles: list[ProjectionProfile]) -> list[ProjectionProfile]:
    """Scale a profile set by its shared maximum so the peak is exactly 1."""
    peak = max(float(p.samples.max(initial=0.0)) for p in profiles)
    if peak <= 0.0:
        raise ValueError("cannot normalize an all-zero profile set")
    return [
        replace(p, samples=p.samples / peak, normalization=Normalization.GLOBAL_MAX)
        for p in profiles
    ]


def _piecewise_linear_bin_means(y: np.ndarray, n_bins: int) -> np.ndarray:
    """Exact means of the linear interpolant of ``y`` over equal bins.

    The interpolant lives on [0, len(y)-1]; each output value is the analytic
    integral of the interpolant over one of ``n_bins`` equal sub-intervals,
    divided by the bin width.
    """
    n = len(y)
    length = float(n - 1)
    edges = np.linspace(0.0, length, n_bins + 1)
    # cumulative integral of the interpolant at each sample point
    cum = np.concatenate([[0.0], np.cumsum((y[:-1] + y[1:]) / 2.0)])

    def antideriv(x: np.ndarray) -> np.ndarray:
        i = np.clip(np.floor(x).astype(np.int64), 0, n - 2)
        f = x - i
        return cum[i] + y[i] * f + (y[i + 1] - y[i]) * f * f / 2.0

    integrals = antideriv(edges[1:]) - antideriv(edges[:-1])
    return integrals / (length / n_bins)


def resample_profile(profile: ProjectionProfile, target_width: int) -> ProjectionProfile:
    """Shrink or stretch the nonzero support of a profile to ``target_width``.

    The support samples are treated as a piecewise-linear function and the
    output is its mean over ``target_width`` equal bins (area resampling, so
    no support feature is skipped when decimating hard).  Resampling to the
    support's own width returns it unchanged.
    """
    if target_width < 2:
        raise ValueError("target_width must be >= 2")
    lo, hi = profile.support()
    supp = profile.samples[lo:hi + 1]
    if len(supp) == target_width:
        out = supp.copy()
    else:
        out = _piecewise_linear_bin_means(supp, target_width)
    return ProjectionProfile(samples=out, angle=profile.angle,
                             normalization=profile.normalization)


def dual_edge_profile(spec: CrossSectionSpec, target_width: int) -> ProjectionProfile:
    """Normalized two-peak brush of a plain annulus, ``target_width`` wide."""
    if spec.kind is not TubeKind.PLAIN:
        raise ValueError("dual-edge profile requires a plain tube")
    field = render_cross_section(spec)
    prof = resample_profile(project(field, 0.0), target_width)
    return normalize_global_max([prof])[0]
