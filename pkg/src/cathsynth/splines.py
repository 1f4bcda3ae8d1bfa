"""Random B-spline paths evaluated with De Boor's recursion.

Catheter centerlines are clamped uniform B-splines whose control points are
drawn uniformly over an inset of the target image.  ``flatten`` turns the
continuous curve into an arc-length-parameterized polyline with unit
tangents, ready for brush sweeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SplineSpec:
    degree: int
    control_points: np.ndarray   # (n, 2) image-pixel coordinates (x, y)
    knots: np.ndarray            # (n + degree + 1,), non-decreasing

    def __post_init__(self):
        pts = np.asarray(self.control_points, dtype=np.float64)
        knots = np.asarray(self.knots, dtype=np.float64)
        object.__setattr__(self, "control_points", pts)
        object.__setattr__(self, "knots", knots)
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if len(pts) < self.degree + 1:
            raise ValueError(f"need at least {self.degree + 1} control points")
        if len(knots) != len(pts) + self.degree + 1:
            raise ValueError("knot count must equal n_ctrl + degree + 1")
        if np.any(np.diff(knots) < 0):
            raise ValueError("knots must be non-decreasing")

    @property
    def domain(self) -> tuple[float, float]:
        n = len(self.control_points)
        return float(self.knots[self.degree]), float(self.knots[n])


@dataclass
class SplinePath:
    """Polyline with per-point unit tangents, spaced about ``arc_step`` apart."""

    points: np.ndarray     # (m, 2)
    tangents: np.ndarray   # (m, 2), unit norm
    arc_step: float

    def __len__(self) -> int:
        return len(self.points)


def clamped_uniform_knots(n_ctrl: int, degree: int) -> np.ndarray:
    """Clamped knot vector on [0, 1] with uniformly spaced interior knots."""
    interior = n_ctrl - degree - 1
    mid = np.linspace(0.0, 1.0, interior + 2)[1:-1]
    return np.concatenate([np.zeros(degree + 1), mid, np.ones(degree + 1)])


def _find_span(knots: np.ndarray, degree: int, n_ctrl: int, u: float) -> int:
    """Index k with knots[k] <= u < knots[k+1], treating the domain end as closed."""
    hi = n_ctrl
    if u >= knots[hi]:
        k = hi - 1
        while knots[k] == knots[hi]:
            k -= 1
        return k
    return int(np.searchsorted(knots, u, side="right") - 1)


def _de_boor_raw(degree: int, pts: np.ndarray, knots: np.ndarray, u: float) -> np.ndarray:
    k = _find_span(knots, degree, len(pts), u)
    if degree == 0:
        return pts[k].copy()
    d = [pts[j + k - degree].copy() for j in range(degree + 1)]
    for r in range(1, degree + 1):
        for j in range(degree, r - 1, -1):
            denom = knots[j + 1 + k - r] - knots[j + k - degree]
            alpha = 0.0 if denom == 0.0 else (u - knots[j + k - degree]) / denom
            d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j]
    return d[degree]


def de_boor(spec: SplineSpec, u: float) -> np.ndarray:
    """Point on the curve at parameter ``u`` via the triangular recursion."""
    lo, hi = spec.domain
    if not (lo <= u <= hi):
        raise ValueError(f"u={u} outside spline domain [{lo}, {hi}]")
    return _de_boor_raw(spec.degree, spec.control_points, spec.knots, u)


def _velocity(spec: SplineSpec, u: float) -> np.ndarray:
    """First derivative of the curve, evaluated via the derivative spline."""
    p = spec.degree
    pts = spec.control_points
    knots = spec.knots
    denom = knots[p + 1:len(pts) + p] - knots[1:len(pts)]
    denom = np.where(denom == 0.0, 1.0, denom)
    d_pts = p * (pts[1:] - pts[:-1]) / denom[:, None]
    return _de_boor_raw(p - 1, d_pts, knots[1:-1], u)


def random_path(rng: np.random.Generator, bounds: tuple[int, int],
                n_ctrl: int, degree: int = 3) -> SplineSpec:
    """Spline with control points uniform over a 5%-inset of ``bounds`` (w, h)."""
    if n_ctrl < degree + 1:
        raise ValueError(f"need n_ctrl >= degree + 1, got {n_ctrl} < {degree + 1}")
    w, h = bounds
    margin = 0.05 * min(w, h)
    xs = rng.uniform(margin, w - margin, size=n_ctrl)
    ys = rng.uniform(margin, h - margin, size=n_ctrl)
    return SplineSpec(degree=degree,
                      control_points=np.stack([xs, ys], axis=1),
                      knots=clamped_uniform_knots(n_ctrl, degree))


_CHORD_TOL = 0.1  # px; adaptive subdivision target


def _dense_samples(spec: SplineSpec) -> tuple[np.ndarray, np.ndarray]:
    """(u values, points) sampled finely enough that chord error <= 0.1 px."""
    lo, hi = spec.domain
    us = list(np.linspace(lo, hi, 4 * len(spec.control_points) + 1))
    pts = [de_boor(spec, u) for u in us]
    i = 0
    while i < len(us) - 1:
        um = 0.5 * (us[i] + us[i + 1])
        pm = de_boor(spec, um)
        chord_mid = 0.5 * (pts[i] + pts[i + 1])
        if np.hypot(*(pm - chord_mid)) > _CHORD_TOL:
            us.insert(i + 1, um)
            pts.insert(i + 1, pm)
        else:
            i += 1
    return np.array(us), np.array(pts)


def flatten(spec: SplineSpec, arc_step: float) -> SplinePath:
    """Arc-length resampling of the curve at ``arc_step`` spacing."""
    if arc_step <= 0:
        raise ValueError("arc_step must be positive")
    us, pts = _dense_samples(spec)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(s[-1])
    if total < arc_step / 2.0:
        return SplinePath(points=np.empty((0, 2)), tangents=np.empty((0, 2)),
                          arc_step=arc_step)
    n_pts = int(round(total / arc_step)) + 1
    targets = np.linspace(0.0, total, n_pts)
    u_at = np.interp(targets, s, us)

    out_pts = np.array([de_boor(spec, u) for u in u_at])
    vel = np.array([_velocity(spec, u) for u in u_at])
    norms = np.hypot(*vel.T)
    # a vanishing derivative (repeated control points) borrows the chord direction
    bad = norms < 1e-12
    if bad.any():
        chords = np.gradient(out_pts, axis=0)
        vel[bad] = chords[bad]
        norms = np.hypot(*vel.T)
        norms[norms < 1e-12] = 1.0
    tangents = vel / norms[:, None]
    return SplinePath(points=out_pts, tangents=tangents, arc_step=arc_step)
