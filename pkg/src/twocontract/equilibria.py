"""Locating equilibria and classifying them from index and region information.

Classification deliberately avoids linearisation: the index of a small
circle separates saddles (-1) from nodes and foci (+1), and the sign of the
Jacobian trace at the point (its region) separates stable from unstable.
:func:`oracle_classify_eigen` exists only as an independent check for tests.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ClassificationError, ConfigurationError, CurveError, FieldEvaluationError
from .poincare import Circle, local_circle_radius, winding_number
from .regions import RegionLabel, RegionWarning
from .systems import FamilyParams, VectorField

__all__ = [
    "EquilibriumPoint",
    "family_equilibria",
    "newton",
    "find_equilibria",
    "classify",
    "oracle_classify_eigen",
]

RESIDUAL_TOL = 1e-10
DEDUP_TOL = 1e-6
MIN_RADIUS = 1e-6


@dataclass
class EquilibriumPoint:
    location: tuple[float, float]
    index: int | None = None
    nature: str = "unknown"
    region: str = "unknown"
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {"x": self.location[0], "y": self.location[1], "index": self.index,
                "nature": self.nature, "region": self.region, "residual": self.residual}


def _residual(field: VectorField, x) -> float:
    f = field.evaluate(np.asarray(x, dtype=float))
    return float(math.hypot(f[0], f[1]))


def family_equilibria(params: FamilyParams) -> list[EquilibriumPoint]:
    """Closed-form equilibria: the origin and ``(+-(b1/b3)^(1/2s), 0)``, sorted."""
    a = (params.b1 / params.b3) ** (1.0 / (2 * params.s))
    return [EquilibriumPoint(location=p) for p in sorted([(-a, 0.0), (0.0, 0.0), (a, 0.0)])]


def newton(field: VectorField, x0, tol: float = RESIDUAL_TOL, max_iter: int = 60,
           max_step: float = math.inf, escape: float = 1e8):
    """Plain Newton iteration with the analytic Jacobian.

    Returns ``(root, residual_history)`` or ``None`` when the seed is
    abandoned (singular Jacobian, divergence, or no convergence).
    """
    def step_from(x, f):
        (a, b), (c, d) = field.jacobian(x)
        det = a * d - b * c
        scale = max(abs(a), abs(b), abs(c), abs(d), 1e-300)
        if det == 0.0 or abs(det) < 1e-14 * scale * scale:
            return None
        step = np.array([(d * f[0] - b * f[1]) / det, (a * f[1] - c * f[0]) / det])
        length = math.hypot(*step)
        if length > max_step:
            step *= max_step / length
        return x - step

    x = np.array(x0, dtype=float)
    try:
        f = field.evaluate(x)
        history = [float(math.hypot(*f))]
        for _ in range(max_iter):
            if history[-1] < tol:
                break
            x = step_from(x, f)
            if x is None or not np.all(np.isfinite(x)) or np.max(np.abs(x)) > escape:
                return None
            f = field.evaluate(x)
            history.append(float(math.hypot(*f)))
        if history[-1] >= tol:
            return None
        # polish: accept extra steps only while the residual keeps dropping
        for _ in range(2):
            if history[-1] == 0.0:
                break
            trial = step_from(x, f)
            if trial is None:
                break
            ft = field.evaluate(trial)
            rt = float(math.hypot(*ft))
            if not rt < history[-1]:
                break
            x, f = trial, ft
            history.append(rt)
    except FieldEvaluationError:
        return None
    return (float(x[0]), float(x[1])), history


def find_equilibria(field: VectorField, bbox, seeds_per_axis: int = 15, tol: float = RESIDUAL_TOL,
                    notes: list | None = None) -> list[EquilibriumPoint]:
    """Newton from a regular grid of seeds over ``bbox = (x0, x1, y0, y1)``.

    Roots closer than 1e-6 are merged. Roots up to 10% of the box size
    outside ``bbox`` are kept; farther ones are dropped and, if ``notes`` is
    given, recorded there.
    """
    x0, x1, y0, y1 = (float(v) for v in bbox)
    if not (x1 > x0 and y1 > y0):
        raise ConfigurationError(f"degenerate bounding box {bbox}")
    if seeds_per_axis < 3:
        raise ConfigurationError("seeds_per_axis must be >= 3")
    wx, wy = x1 - x0, y1 - y0
    diag = math.hypot(wx, wy)
    found: list[tuple[tuple[float, float], float]] = []
    for sy in np.linspace(y0, y1, seeds_per_axis):
        for sx in np.linspace(x0, x1, seeds_per_axis):
            res = newton(field, (sx, sy), tol=tol, max_step=diag)
            if res is None:
                continue
            root, history = res
            if not (x0 - 0.1 * wx <= root[0] <= x1 + 0.1 * wx and y0 - 0.1 * wy <= root[1] <= y1 + 0.1 * wy):
                if notes is not None:
                    notes.append(f"discarded root ({root[0]:.6g}, {root[1]:.6g}) outside the search box")
                continue
            if any(math.hypot(root[0] - q[0], root[1] - q[1]) < DEDUP_TOL for q, _ in found):
                continue
            found.append((root, history[-1]))
    found.sort(key=lambda item: item[0])
    return [EquilibriumPoint(location=loc, residual=r) for loc, r in found]


def _local_index(field: VectorField, loc, radius: float, initial_samples: int) -> int:
    while radius >= MIN_RADIUS:
        try:
            return winding_number(field, Circle(loc, radius), initial_samples).index
        except CurveError:
            radius *= 0.5
    raise ClassificationError(f"no usable index circle around ({loc[0]:.6g}, {loc[1]:.6g}) above radius {MIN_RADIUS:g}")


def classify(eqs: Sequence[EquilibriumPoint], field: VectorField, region_of: Callable,
             total_index: int | None = None, initial_samples: int = 64) -> list[EquilibriumPoint]:
    """Annotate each equilibrium with its index, region and nature.

    index -1 gives a saddle. index +1 gives stable in Omega and unstable in
    Omega1. Anything on the Omega0 band, any other index, or any +1 point
    when ``total_index`` is known and differs from +1, is left ``unknown``.
    """
    locs = [tuple(map(float, e.location)) for e in eqs]
    out = []
    for i, (e, loc) in enumerate(zip(eqs, locs)):
        idx = _local_index(field, loc, local_circle_radius(locs, i), initial_samples)
        region = RegionLabel(region_of(loc))
        nature = "unknown"
        if region is RegionLabel.OMEGA0:
            warnings.warn(f"equilibrium at ({loc[0]:.6g}, {loc[1]:.6g}) lies on the Omega0 band; nature left unknown",
                          RegionWarning, stacklevel=2)
        elif idx == -1:
            nature = "saddle"
        elif idx == 1 and (total_index is None or total_index == 1):
            nature = "stable" if region is RegionLabel.OMEGA else "unstable"
        out.append(EquilibriumPoint(location=loc, index=idx, nature=nature, region=region.value,
                                    residual=_residual(field, loc)))
    return out


def oracle_classify_eigen(field: VectorField, eq) -> str:
    """Linearisation verdict from the Jacobian eigenvalues (test oracle only)."""
    if _residual(field, eq) >= 1e-8:
        raise ValueError(f"({eq[0]}, {eq[1]}) is not an equilibrium")
    J = field.jacobian(np.asarray(eq, dtype=float))
    re = np.linalg.eigvals(J).real
    tol = 1e-12 * max(1.0, float(np.abs(J).max()))
    if np.any(np.abs(re) <= tol):
        return "center-like"
    if np.all(re < 0):
        return "stable"
    if np.all(re > 0):
        return "unstable"
    return "saddle"
