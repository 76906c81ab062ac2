"""Contraction regions, energy sublevel sets and the common basin estimate.

A point is labelled by the sign of the Jacobian trace ``t`` (the planar
second additive compound):

* ``Omega``  -- ``t < -eta``, area-contracting;
* ``Omega1`` -- ``t > band``, area-expanding;
* ``Omega0`` -- ``|t| <= band``, plus the margin ``-eta <= t < -band`` when
  ``eta > band``.

The basin estimate is ``D0 = Omega & U`` with ``U = {E(x) < r}``.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError
from .systems import FamilyField, FamilyParams, NetworkField, NetworkParams, VectorField, _ipow

__all__ = [
    "RegionLabel",
    "RegionWarning",
    "EnergySpec",
    "RegionGrid",
    "EnergyReport",
    "omega_label",
    "omega_codes",
    "energy",
    "energy_gradient",
    "energy_rate",
    "family_rate_closed_form",
    "energy_spec_for",
    "build_region_grid",
    "validate_energy_decrease",
    "equilibria_region_report",
    "level_set_contours",
]

DEFAULT_BAND = 1e-9


class RegionLabel(str, enum.Enum):
    OMEGA = "Omega"
    OMEGA0 = "Omega0"
    OMEGA1 = "Omega1"


_CODES = (RegionLabel.OMEGA, RegionLabel.OMEGA0, RegionLabel.OMEGA1)


class RegionWarning(UserWarning):
    pass


def omega_codes(field: VectorField, points, eta: float = 0.0, band: float = DEFAULT_BAND) -> np.ndarray:
    """Vectorised labels as integer codes (0 Omega, 1 Omega0, 2 Omega1)."""
    t = np.asarray(field.trace_j2(points), dtype=float)
    codes = np.ones(t.shape, dtype=np.int8)
    codes[t < -eta] = 0
    codes[t > band] = 2
    codes[np.abs(t) <= band] = 1
    return codes


def omega_label(field: VectorField, x, eta: float = 0.0, band: float = DEFAULT_BAND) -> RegionLabel:
    if eta < 0 or band <= 0:
        raise ConfigurationError("need eta >= 0 and band > 0")
    return _CODES[int(omega_codes(field, np.asarray(x, dtype=float), eta, band))]


@dataclass(frozen=True)
class EnergySpec:
    """Candidate energy ``E`` and level value ``r``.

    ``family`` uses the double-well energy of the family parameters;
    ``network`` and ``quadratic`` use ``E = |x|^2 / 2``.
    """

    kind: str
    params: FamilyParams | NetworkParams | None
    r: float

    def __post_init__(self):
        if self.kind not in ("family", "network", "quadratic"):
            raise ConfigurationError(f"unknown energy kind {self.kind!r}")
        if self.kind == "family" and not isinstance(self.params, FamilyParams):
            raise ConfigurationError("family energy needs FamilyParams")
        if self.kind == "network" and not isinstance(self.params, NetworkParams):
            raise ConfigurationError("network energy needs NetworkParams")
        if not math.isfinite(self.r):
            raise ConfigurationError("level value r must be finite")


def energy_spec_for(field: VectorField, r: float) -> EnergySpec:
    if isinstance(field, FamilyField):
        return EnergySpec("family", field.params, float(r))
    if isinstance(field, NetworkField):
        return EnergySpec("network", field.params, float(r))
    return EnergySpec("quadratic", None, float(r))


def energy(spec: EnergySpec, x):
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    if spec.kind == "family":
        p = spec.params
        value = 0.5 * x2 * x2 - 0.5 * p.b1 * x1 * x1 + (p.b3 / (2 * p.s + 2)) * _ipow(x1, 2 * p.s + 2)
    else:
        value = 0.5 * (x1 * x1 + x2 * x2)
    return float(value) if np.ndim(value) == 0 else value


def energy_gradient(spec: EnergySpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if spec.kind == "family":
        p = spec.params
        x1, x2 = x[..., 0], x[..., 1]
        g1 = -p.b1 * x1 + p.b3 * _ipow(x1, 2 * p.s + 1)
        return np.stack([g1, x2], axis=-1)
    return x.copy()


def _check_pair(spec: EnergySpec, field: VectorField) -> None:
    if spec.kind == "family" and not (isinstance(field, FamilyField) and field.params == spec.params):
        raise ConfigurationError("family energy spec does not match the field's parameters")
    if spec.kind == "network" and not (isinstance(field, NetworkField) and field.params == spec.params):
        raise ConfigurationError("network energy spec does not match the field's parameters")


def energy_rate(spec: EnergySpec, field: VectorField, x):
    """Time derivative of ``E`` along the flow, ``grad E(x) . f(x)``."""
    _check_pair(spec, field)
    rate = np.sum(energy_gradient(spec, x) * field.evaluate(x), axis=-1)
    return float(rate) if np.ndim(rate) == 0 else rate


def family_rate_closed_form(params: FamilyParams, x):
    """``b2 x2^2 + b4 x1^(2m) x2^(2q+2)``."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    value = params.b2 * x2 ** 2 + params.b4 * x1 ** (2 * params.m) * x2 ** (2 * params.q + 2)
    return float(value) if np.ndim(value) == 0 else value


@dataclass
class RegionGrid:
    """Cell-centre raster of region labels with ``U`` and ``D0`` membership.

    Arrays are indexed ``[j, i]`` with ``j`` along ``x2`` (rows) and ``i``
    along ``x1`` (columns).
    """

    bbox: tuple[float, float, float, float]
    nx: int
    ny: int
    xs: np.ndarray
    ys: np.ndarray
    codes: np.ndarray
    in_U: np.ndarray
    in_D0: np.ndarray
    energy_values: np.ndarray = dc_field(repr=False)
    eta: float = 0.0
    band: float = DEFAULT_BAND
    r: float = 0.0
    spec: EnergySpec | None = None

    @property
    def cell_size(self) -> tuple[float, float]:
        x0, x1, y0, y1 = self.bbox
        return (x1 - x0) / self.nx, (y1 - y0) / self.ny

    @property
    def centers(self) -> np.ndarray:
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.stack([X, Y], axis=-1)

    def label(self, j: int, i: int) -> RegionLabel:
        return _CODES[int(self.codes[j, i])]

    def contains_d0(self, field: VectorField, point) -> bool:
        """Exact D0 membership of an arbitrary point (not just a cell centre)."""
        p = np.asarray(point, dtype=float)
        return bool(omega_codes(field, p, self.eta, self.band) == 0 and energy(self.spec, p) < self.r)

    def label_at(self, point) -> RegionLabel:
        """Label of the cell containing ``point`` (clamped to the grid)."""
        x0, _, y0, _ = self.bbox
        dx, dy = self.cell_size
        i = min(max(int((point[0] - x0) // dx), 0), self.nx - 1)
        j = min(max(int((point[1] - y0) // dy), 0), self.ny - 1)
        return self.label(j, i)

    def summary(self) -> dict:
        total = self.codes.size
        counts = {lab.value: int(np.count_nonzero(self.codes == c)) for c, lab in enumerate(_CODES)}
        out = {
            "cells": int(total),
            "counts": counts,
            "fractions": {k: v / total for k, v in counts.items()},
            "U_cells": int(np.count_nonzero(self.in_U)),
            "D0_cells": int(np.count_nonzero(self.in_D0)),
            "D0_fraction": float(np.count_nonzero(self.in_D0)) / total,
        }
        if counts[RegionLabel.OMEGA.value] == 0:
            out["note"] = "no Omega region"
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "y", "label", "in_U", "in_D0"])
        for j in range(self.ny):
            for i in range(self.nx):
                writer.writerow([f"{self.xs[i]:.12g}", f"{self.ys[j]:.12g}", self.label(j, i).value,
                                 int(self.in_U[j, i]), int(self.in_D0[j, i])])
        return buf.getvalue()


def build_region_grid(field: VectorField, spec: EnergySpec, bbox, nx: int = 100, ny: int = 100,
                      eta: float = 0.0, band: float = DEFAULT_BAND) -> RegionGrid:
    x0, x1, y0, y1 = (float(v) for v in bbox)
    if not (x1 > x0 and y1 > y0):
        raise ConfigurationError(f"degenerate bounding box {bbox}")
    if nx < 16 or ny < 16:
        raise ConfigurationError("grid needs at least 16 cells per axis")
    if eta < 0 or band <= 0:
        raise ConfigurationError("need eta >= 0 and band > 0")
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X, Y], axis=-1)
    codes = omega_codes(field, pts, eta, band)
    E = np.asarray(energy(spec, pts))
    in_U = E < spec.r
    in_D0 = (codes == 0) & in_U
    return RegionGrid(bbox=(x0, x1, y0, y1), nx=nx, ny=ny, xs=xs, ys=ys, codes=codes, in_U=in_U,
                      in_D0=in_D0, energy_values=E, eta=eta, band=band, r=spec.r, spec=spec)


@dataclass
class EnergyReport:
    d0_cells: int
    d0_pass: int
    u_only_cells: int
    u_only_violations: int
    violations: list = dc_field(default_factory=list)
    network_bound: dict | None = None

    @property
    def pass_fraction(self) -> float:
        return self.d0_pass / self.d0_cells if self.d0_cells else 1.0

    def to_dict(self) -> dict:
        return {
            "d0_cells": self.d0_cells,
            "d0_pass": self.d0_pass,
            "pass_fraction": self.pass_fraction,
            "u_only_cells": self.u_only_cells,
            "u_only_violations": self.u_only_violations,
            "violations": self.violations,
            "network_bound": self.network_bound,
        }


def validate_energy_decrease(spec: EnergySpec, field: VectorField, grid: RegionGrid,
                             tol: float = 1e-12, max_listed: int = 50) -> EnergyReport:
    """Check ``dE/dt <= tol`` on every D0 cell.

    Cells of ``U`` outside ``Omega`` are counted separately and do not affect
    the pass fraction. For network fields the outer bound
    ``dE/dt <= -delta |x| (|x| - C1/delta)`` with ``C1 = pi ||W||_2`` is also
    checked on every cell.
    """
    pts = grid.centers
    rate = np.asarray(energy_rate(spec, field, pts))
    ok = rate <= tol
    d0 = grid.in_D0
    u_only = grid.in_U & ~grid.in_D0
    bad = np.argwhere(d0 & ~ok)
    listed = [[float(grid.xs[i]), float(grid.ys[j]), float(rate[j, i])] for j, i in bad[:max_listed]]

    bound = None
    if spec.kind == "network":
        p = spec.params
        delta = min(p.delta)
        C1 = p.pi * float(np.linalg.norm(p.W_matrix, 2))
        norm = np.linalg.norm(pts, axis=-1)
        rhs = -delta * norm * (norm - C1 / delta)
        scale = np.maximum(1.0, np.abs(rhs))
        outer = norm > C1 / delta
        bound = {
            "C1": C1,
            "delta": delta,
            "radius": C1 / delta,
            "cells": int(rate.size),
            "bound_violations": int(np.count_nonzero(rate > rhs + 1e-12 * scale)),
            "outer_cells": int(np.count_nonzero(outer)),
            "outer_pass": int(np.count_nonzero(outer & ok)),
        }
    return EnergyReport(
        d0_cells=int(np.count_nonzero(d0)),
        d0_pass=int(np.count_nonzero(d0 & ok)),
        u_only_cells=int(np.count_nonzero(u_only)),
        u_only_violations=int(np.count_nonzero(u_only & ~ok)),
        violations=listed,
        network_bound=bound,
    )


def equilibria_region_report(eqs: Sequence, region_of: Callable | RegionGrid) -> dict:
    """Tag each equilibrium with its region; warn if any sits on the Omega0 band."""
    labeler = region_of.label_at if isinstance(region_of, RegionGrid) else region_of
    entries = []
    warns = []
    for e in eqs:
        loc = getattr(e, "location", e)
        loc = (float(loc[0]), float(loc[1]))
        lab = RegionLabel(labeler(loc))
        entries.append({"location": list(loc), "region": lab.value})
        if lab is RegionLabel.OMEGA0:
            msg = f"equilibrium at ({loc[0]:.6g}, {loc[1]:.6g}) lies on the Omega0 boundary band"
            warns.append(msg)
            warnings.warn(msg, RegionWarning, stacklevel=2)
    return {"equilibria": entries, "warnings": warns}


def level_set_contours(grid: RegionGrid) -> list[np.ndarray]:
    """Polylines (in state coordinates) tracing ``E = r`` over the grid, by marching squares."""
    from skimage import measure

    contours = measure.find_contours(grid.energy_values, level=grid.r)
    out = []
    for c in contours:
        rows, cols = c[:, 0], c[:, 1]
        xs = np.interp(cols, np.arange(grid.nx), grid.xs)
        ys = np.interp(rows, np.arange(grid.ny), grid.ys)
        out.append(np.stack([xs, ys], axis=-1))
    return out
