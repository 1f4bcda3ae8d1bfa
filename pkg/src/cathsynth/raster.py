"""Antialiased rasterization of catheter ink and label bands.

Two painters share one canvas type: ``wu_line`` draws antialiased
centerlines with Xiaolin Wu's two-pixel coverage scheme, and ``stroke_path``
sweeps a 1D intensity profile perpendicular to a spline path, stamping it
with subpixel interpolation.  Everything combines with a saturating
per-pixel max so self-crossing catheters never brighten.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .profiles import ProjectionProfile
from .splines import SplinePath


class LayerRole(enum.Enum):
    CATHETER_INK = "catheter_ink"
    LABEL_INK = "label_ink"


@dataclass
class IntensityLayer:
    grid: np.ndarray
    role: LayerRole = LayerRole.CATHETER_INK

    @classmethod
    def blank(cls, height: int, width: int, role: LayerRole = LayerRole.CATHETER_INK):
        return cls(grid=np.zeros((height, width)), role=role)


def _plot(grid: np.ndarray, x: int, y: int, cov: float) -> None:
    h, w = grid.shape
    if 0 <= x < w and 0 <= y < h and cov > grid[y, x]:
        grid[y, x] = min(cov, 1.0)


def _tri_antideriv(t: float) -> float:
    """Antiderivative of the unit tent max(0, 1-|t|), zero at t=0."""
    a = min(abs(t), 1.0)
    return math.copysign(a - a * a / 2.0, t)


def wu_line(p0: tuple[float, float], p1: tuple[float, float],
            canvas: IntensityLayer) -> IntensityLayer:
    """Antialiased line in Wu's per-column coverage model, max-combined.

    Each column along the driving axis distributes unit coverage between the
    pixels straddling the ideal line.  The straddle fraction is integrated
    exactly across the column (rather than sampled at the column midpoint),
    which keeps the result within supersampling-oracle tolerance at diagonal
    slopes where the classic midpoint split over-concentrates.
    """
    x0, y0 = float(p0[0]), float(p0[1])
    x1, y1 = float(p1[0]), float(p1[1])
    if not all(map(math.isfinite, (x0, y0, x1, y1))):
        raise ValueError("line endpoints must be finite")
    grid = canvas.grid

    if x0 == x1 and y0 == y1:
        _plot(grid, round(x0), round(y0), 1.0)
        return canvas

    steep = abs(y1 - y0) > abs(x1 - x0)
    if steep:
        x0, y0, x1, y1 = y0, x0, y1, x1
    if x0 > x1:
        x0, x1 = x1, x0
        y0, y1 = y1, y0
    gradient = (y1 - y0) / (x1 - x0)

    def put(px: int, py: int, cov: float):
        if steep:
            _plot(grid, py, px, cov)
        else:
            _plot(grid, px, py, cov)

    # all coverage arithmetic runs on fractional offsets so that translating
    # both endpoints by integers reproduces coverage bit-exactly
    xs, xe = round(x0), round(x1)
    fx0 = x0 - xs
    ybase = round(y0)
    fy0 = y0 - ybase
    for px in range(xs, xe + 1):
        i = px - xs
        ya = fy0 + gradient * (i - 0.5 - fx0)
        yb = fy0 + gradient * (i + 0.5 - fx0)
        if ya > yb:
            ya, yb = yb, ya
        span = yb - ya
        for j in range(math.floor(ya) - 1, math.floor(yb) + 2):
            if span < 1e-12:
                cov = max(0.0, 1.0 - abs(ya - j))
            else:
                cov = (_tri_antideriv(yb - j) - _tri_antideriv(ya - j)) / span
            if cov > 0.0:
                put(px, ybase + j, cov)
    return canvas


def stroke_path(path: SplinePath, brush: ProjectionProfile,
                canvas: IntensityLayer) -> IntensityLayer:
    """Sweep ``brush`` along the path, stamping it perpendicular to the tangent.

    Each path sample stamps the linearly interpolated brush onto nearby
    pixels by their signed perpendicular distance; stamps merge into the
    canvas with a per-pixel max, so overlap (dense sampling, self-crossings)
    never exceeds the brush value.
    """
    b = np.asarray(brush.samples, dtype=np.float64)
    if b.min(initial=0.0) < 0.0 or b.max(initial=0.0) > 1.0 + 1e-9:
        raise ValueError("brush must be normalized to [0, 1]")
    grid = canvas.grid
    h, w = grid.shape
    half = (len(b) - 1) / 2.0
    if len(b) > min(h, w):
        raise ValueError("brush wider than canvas")
    if len(path) == 0:
        return canvas

    offsets = np.arange(len(b)) - half
    reach = int(math.ceil(half)) + 1
    sigma_max = 0.5 * max(1.0, path.arc_step)
    for (px, py), (tx, ty) in zip(path.points, path.tangents):
        nx, ny = -ty, tx
        x_lo = max(0, int(math.floor(px - reach)))
        x_hi = min(w - 1, int(math.ceil(px + reach)))
        y_lo = max(0, int(math.floor(py - reach)))
        y_hi = min(h - 1, int(math.ceil(py + reach)))
        if x_lo > x_hi or y_lo > y_hi:
            continue
        xs = np.arange(x_lo, x_hi + 1) - px
        ys = np.arange(y_lo, y_hi + 1) - py
        X, Y = np.meshgrid(xs, ys)
        tau = X * nx + Y * ny
        sigma = X * tx + Y * ty
        vals = np.interp(tau + half, offsets + half, b, left=0.0, right=0.0)
        vals[np.abs(tau) > half] = 0.0
        vals[np.abs(sigma) > sigma_max] = 0.0
        region = grid[y_lo:y_hi + 1, x_lo:x_hi + 1]
        np.maximum(region, vals, out=region)
    return canvas


def stroke_label(path: SplinePath, width: int, canvas: IntensityLayer) -> IntensityLayer:
    """Binary band of ``width`` pixels centered on the path.

    Offset polylines at each integer brush position are drawn with Wu
    coverage and thresholded at 0.5.
    """
    if width < 1:
        raise ValueError("width must be >= 1")
    if len(path) == 0:
        return canvas
    cover = IntensityLayer.blank(*canvas.grid.shape, role=LayerRole.LABEL_INK)
    # decimate the dense sweep path; Wu segments a couple of pixels long are
    # plenty for a 0.1 px chord-accurate polyline
    step = max(1, int(round(2.0 / max(path.arc_step, 1e-6))))
    idx = list(range(0, len(path), step))
    if idx[-1] != len(path) - 1:
        idx.append(len(path) - 1)
    pts = path.points[idx]
    tans = path.tangents[idx]
    normals = np.stack([-tans[:, 1], tans[:, 0]], axis=1)
    # half-pixel offset spacing: 1 px spacing leaves sub-threshold pinholes
    # between neighboring offset polylines on diagonal runs
    half = (width - 1) / 2.0
    for off in np.arange(-half, half + 0.25, 0.5):
        poly = pts + off * normals
        if len(poly) == 1:
            wu_line(poly[0], poly[0], cover)
            continue
        for a, b in zip(poly[:-1], poly[1:]):
            wu_line(a, b, cover)
    np.maximum(canvas.grid, (cover.grid >= 0.5).astype(canvas.grid.dtype),
               out=canvas.grid)
    return canvas
