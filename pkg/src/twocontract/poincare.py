"""Winding number (Poincare index) of a planar field along a closed curve.

The direction angle ``atan2(f2, f1)`` is sampled along the curve and the
wrapped increments are summed. Any increment larger than a quarter turn is
bisected (up to ``max_depth`` levels) so a full turn cannot hide between
two samples.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import (
    CurveError,
    CurveThroughEquilibriumError,
    IndexAmbiguityError,
    IndexInconsistencyError,
)

__all__ = [
    "Circle",
    "Polyline",
    "IndexResult",
    "winding_number",
    "quarter_turn_table",
    "table_to_csv",
    "local_circle_radius",
    "index_additivity_check",
]

TWO_PI = 2.0 * math.pi
MIN_FIELD_NORM = 1e-9
REFINE_TRIGGER = 0.5 * math.pi
RESIDUAL_GATE = 0.1


def _wrap(d: float) -> float:
    """Map an angle difference to (-pi, pi]."""
    d = math.remainder(d, TWO_PI)
    return math.pi if d == -math.pi else d


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float
    clockwise: bool = False

    def __post_init__(self):
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise CurveError(f"circle radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "radius", float(self.radius))

    def point(self, s: float) -> np.ndarray:
        theta = TWO_PI * s
        if self.clockwise:
            theta = -theta
        return np.array([self.center[0] + self.radius * math.cos(theta),
                         self.center[1] + self.radius * math.sin(theta)])

    def reversed(self) -> "Circle":
        return Circle(self.center, self.radius, not self.clockwise)

    def contains(self, p) -> bool:
        return math.hypot(p[0] - self.center[0], p[1] - self.center[1]) < self.radius


def _segments_cross(p1, p2, p3, p4) -> bool:
    """True when closed segments p1p2 and p3p4 share any point (touching counts)."""
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_segment(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    return ((d1 == 0 and on_segment(p3, p4, p1)) or (d2 == 0 and on_segment(p3, p4, p2))
            or (d3 == 0 and on_segment(p1, p2, p3)) or (d4 == 0 and on_segment(p1, p2, p4)))


@dataclass(frozen=True)
class Polyline:
    """Closed polygon through ``points``; the closing edge back to the first point is implicit."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = [(float(x), float(y)) for x, y in self.points]
        if len(pts) > 1 and pts[0] == pts[-1]:
            pts = pts[:-1]
        if len(pts) < 8:
            raise CurveError(f"polyline curve needs at least 8 distinct points, got {len(pts)}")
        n = len(pts)
        for i in range(n):
            a, b = pts[i], pts[(i + 1) % n]
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue
                if _segments_cross(a, b, pts[j], pts[(j + 1) % n]):
                    raise CurveError(f"polyline self-intersects between edges {i} and {j}")
        object.__setattr__(self, "points", tuple(pts))

    def point(self, s: float) -> np.ndarray:
        n = len(self.points)
        u = (s % 1.0) * n
        i = int(math.floor(u)) % n
        frac = u - math.floor(u)
        a = self.points[i]
        b = self.points[(i + 1) % n]
        return np.array([a[0] + frac * (b[0] - a[0]), a[1] + frac * (b[1] - a[1])])

    def reversed(self) -> "Polyline":
        return Polyline(tuple(reversed(self.points)))

    @property
    def signed_area(self) -> float:
        pts = self.points
        return 0.5 * sum(pts[i][0] * pts[(i + 1) % len(pts)][1] - pts[(i + 1) % len(pts)][0] * pts[i][1]
                         for i in range(len(pts)))


@dataclass(frozen=True)
class IndexResult:
    index: int
    total_angle_change: float
    samples_used: int
    max_step_angle: float

    def to_dict(self) -> dict:
        return asdict(self)


def winding_number(field, curve, initial_samples: int = 64, max_depth: int = 12,
                   min_field_norm: float = MIN_FIELD_NORM) -> IndexResult:
    """Index of ``curve`` with respect to ``field``.

    Raises
    ------
    CurveThroughEquilibriumError
        The field is (numerically) zero at a sample on the curve.
    IndexAmbiguityError
        A step of a half turn survived ``max_depth`` bisections.
    IndexInconsistencyError
        The accumulated angle is not within 0.1 rad of a multiple of 2*pi.
    """
    if initial_samples < 16:
        raise CurveError(f"initial_samples must be >= 16, got {initial_samples}")

    def angle(s: float) -> float:
        p = curve.point(s)
        f1, f2 = field.evaluate(p)
        if math.hypot(f1, f2) < min_field_norm:
            raise CurveThroughEquilibriumError(
                f"|f| < {min_field_norm:g} at ({p[0]:.6g}, {p[1]:.6g}); move the curve off the equilibrium")
        return math.atan2(f2, f1)

    n = int(initial_samples)
    params = [i / n for i in range(n)]
    phis = [angle(s) for s in params]
    params.append(1.0)
    phis.append(phis[0])

    total = 0.0
    used = n
    max_step = 0.0
    for k in range(n):
        stack = [(params[k], phis[k], params[k + 1], phis[k + 1], 0)]
        while stack:
            sa, pa, sb, pb, depth = stack.pop()
            d = _wrap(pb - pa)
            if abs(d) > REFINE_TRIGGER and depth < max_depth:
                sm = 0.5 * (sa + sb)
                pm = angle(sm)
                used += 1
                # pushed in reverse so segments are consumed in curve order
                stack.append((sm, pm, sb, pb, depth + 1))
                stack.append((sa, pa, sm, pm, depth + 1))
                continue
            if abs(d) >= math.pi:
                raise IndexAmbiguityError(f"half-turn step persists near s={sa:.6g} after {max_depth} bisections")
            total += d
            max_step = max(max_step, abs(d))

    index = int(round(total / TWO_PI))
    if abs(total - TWO_PI * index) >= RESIDUAL_GATE:
        raise IndexInconsistencyError(f"angle change {total:.6g} rad is not close to a multiple of 2*pi")
    return IndexResult(index=index, total_angle_change=total, samples_used=used, max_step_angle=max_step)


_QUADRANT = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))
_THETA_LABELS = ("0", "pi/2", "pi", "3pi/2", "2pi")


def quarter_turn_table(field, radius: float = 4.0, center=(0.0, 0.0)) -> list[dict]:
    """Field direction at the four quadrant points of a circle, closing back at 2*pi.

    Each row has ``theta``, ``f1``, ``f2``, the angle ``phi_deg`` in [0, 360)
    and the wrapped increment ``dphi_deg`` from the previous row (``None`` on
    the first row). Quadrant points use exact cosines and sines, so integer
    fields produce integer components.
    """
    rows = []
    prev = None
    for k in range(5):
        c, s = _QUADRANT[k % 4]
        x = np.array([center[0] + radius * c, center[1] + radius * s])
        f1, f2 = (float(v) for v in field.evaluate(x))
        if math.hypot(f1, f2) < MIN_FIELD_NORM:
            raise CurveThroughEquilibriumError(f"field vanishes at theta={_THETA_LABELS[k]}")
        phi = math.degrees(math.atan2(f2, f1)) % 360.0
        dphi = None if prev is None else math.degrees(_wrap(math.radians(phi - prev)))
        rows.append({"theta_label": _THETA_LABELS[k], "theta": k * math.pi / 2, "f1": f1, "f2": f2,
                     "phi_deg": phi, "dphi_deg": dphi})
        prev = phi
    return rows


def table_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta_label", "theta", "f1", "f2", "phi_deg", "dphi_deg"])
    for r in rows:
        writer.writerow([r["theta_label"], f"{r['theta']:.12g}", f"{r['f1']:.12g}", f"{r['f2']:.12g}",
                         f"{r['phi_deg']:.12g}", "-" if r["dphi_deg"] is None else f"{r['dphi_deg']:+.12g}"])
    return buf.getvalue()


def local_circle_radius(points: Sequence, i: int, cap: float = 0.5) -> float:
    """Radius for an index circle around ``points[i]``: a quarter of the gap to its nearest neighbour, at most ``cap``."""
    p = points[i]
    gaps = [math.hypot(p[0] - q[0], p[1] - q[1]) for j, q in enumerate(points) if j != i]
    if not gaps:
        return cap
    return min(cap, 0.25 * min(gaps))


def index_additivity_check(field, eqs: Sequence, enclosing, initial_samples: int = 64) -> bool:
    """True when the enclosing curve's index equals the sum of the per-equilibrium indices."""
    eqs = [tuple(map(float, e)) for e in eqs]
    total = winding_number(field, enclosing, initial_samples).index
    parts = 0
    for i, p in enumerate(eqs):
        circle = Circle(p, local_circle_radius(eqs, i))
        parts += winding_number(field, circle, initial_samples).index
    return total == parts
