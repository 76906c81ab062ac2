"""Fixed-step RK4 integration, basin validation and area (wedge) evolution.

Trajectories are integrated in batches: every state update is elementwise
numpy arithmetic, so a trajectory's numbers do not depend on which other
trajectories share its batch.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateAreaError, EmptyDomainError, IntegrationError, StepSizeError
from .regions import RegionGrid, energy
from .systems import VectorField

__all__ = [
    "SplitMix64",
    "Trajectory",
    "rk4_step",
    "integrate",
    "integrate_batch",
    "step_size_check",
    "sample_d0",
    "BoaReport",
    "boa_validate",
    "AreaSeries",
    "area_evolution",
    "ProbeResult",
    "periodicity_probe",
]

DEFAULT_DT = 1e-3
DEFAULT_TMAX = 50.0
CONVERGENCE_EPS = 1e-3
DWELL = 1.0
ESCAPE_RADIUS = 1e6

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood); fully specified so any port reproduces it."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Float in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def below(self, n: int) -> int:
        return min(int(self.uniform() * n), n - 1)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    verdict: str
    target: tuple[float, float] | None = None
    max_energy_increase: float | None = None
    max_energy: float | None = None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "x1", "x2"])
        for t, (a, b) in zip(self.times, self.states):
            writer.writerow([f"{t:.12g}", f"{a:.12g}", f"{b:.12g}"])
        return buf.getvalue()


def rk4_step(f: Callable, X: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(X)
    k2 = f(X + (0.5 * dt) * k1)
    k3 = f(X + (0.5 * dt) * k2)
    k4 = f(X + dt * k3)
    return X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_batch(field: VectorField, X0, dt: float = DEFAULT_DT, t_max: float = DEFAULT_TMAX,
                    equilibria: Sequence = (), convergence_eps: float = CONVERGENCE_EPS, dwell: float = DWELL,
                    escape_radius: float = ESCAPE_RADIUS, record_every: int = 1,
                    energy_fn: Callable | None = None) -> list[Trajectory]:
    """Integrate every row of ``X0`` with classic RK4.

    A trajectory stops early once it has stayed within ``convergence_eps``
    of the same registered equilibrium for ``dwell`` time units (verdict
    ``converged``), or when its norm exceeds ``escape_radius`` (``escaped``).
    Otherwise it runs to ``t_max`` (``undecided``). States are stored every
    ``record_every`` steps plus the final state.
    """
    if not dt > 0 or not t_max > 0 or dt > t_max:
        raise IntegrationError(f"need 0 < dt <= t_max, got dt={dt}, t_max={t_max}")
    X = np.array(X0, dtype=float).reshape(-1, 2)
    n = X.shape[0]
    if not np.all(np.isfinite(X)):
        raise IntegrationError("initial states must be finite")
    eqs = np.array([getattr(e, "location", e) for e in equilibria], dtype=float).reshape(-1, 2)
    n_steps = int(round(t_max / dt))

    active = np.ones(n, dtype=bool)
    verdict = ["undecided"] * n
    target: list = [None] * n
    near_idx = np.full(n, -1)
    near_since = np.full(n, np.nan)
    stop_step = np.full(n, n_steps)
    final = X.copy()
    E_prev = np.asarray(energy_fn(X)) if energy_fn else None
    max_inc = np.full(n, -np.inf)
    max_E = E_prev.copy() if energy_fn else None

    records = [X.copy()]
    record_steps = [0]

    def check_near(k, idx):
        if eqs.shape[0] == 0 or idx.size == 0:
            return
        t = k * dt
        d = np.linalg.norm(X[idx, None, :] - eqs[None, :, :], axis=-1)
        nearest = np.argmin(d, axis=1)
        close = d[np.arange(idx.size), nearest] < convergence_eps
        far = idx[~close]
        near_idx[far] = -1
        near_since[far] = np.nan
        idx, nearest = idx[close], nearest[close]
        moved = near_idx[idx] != nearest
        near_idx[idx[moved]] = nearest[moved]
        near_since[idx[moved]] = t
        done = t - near_since[idx] >= dwell - 1e-9 * dt
        for i, e in zip(idx[done], nearest[done]):
            verdict[i] = "converged"
            target[i] = (float(eqs[e, 0]), float(eqs[e, 1]))
            active[i] = False
            stop_step[i] = k
            final[i] = X[i]

    check_near(0, np.arange(n))
    for k in range(1, n_steps + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        X_new = rk4_step(field.evaluate, X[idx], dt)
        if not np.all(np.isfinite(X_new)):
            raise IntegrationError(f"non-finite state at t={k * dt:.6g}")
        X[idx] = X_new
        if energy_fn is not None:
            E_new = np.asarray(energy_fn(X_new))
            max_inc[idx] = np.maximum(max_inc[idx], E_new - E_prev[idx])
            E_prev[idx] = E_new
            max_E[idx] = np.maximum(max_E[idx], E_new)
        escaped = np.linalg.norm(X_new, axis=1) > escape_radius
        for i in idx[escaped]:
            verdict[i] = "escaped"
            active[i] = False
            stop_step[i] = k
            final[i] = X[i]
        still = idx[~escaped]
        check_near(k, still)
        if k % record_every == 0:
            records.append(X.copy())
            record_steps.append(k)
        final[active] = X[active]

    rec = np.stack(records)
    rec_steps = np.array(record_steps)
    out = []
    for i in range(n):
        keep = rec_steps <= stop_step[i]
        steps = rec_steps[keep]
        states = rec[keep, i, :]
        if steps[-1] < stop_step[i]:
            steps = np.append(steps, stop_step[i])
            states = np.vstack([states, final[i]])
        out.append(Trajectory(
            times=steps * dt,
            states=states,
            verdict=verdict[i],
            target=target[i],
            max_energy_increase=float(max(max_inc[i], 0.0)) if energy_fn else None,
            max_energy=float(max_E[i]) if energy_fn else None,
        ))
    return out


def integrate(field: VectorField, x0, dt: float = DEFAULT_DT, t_max: float = DEFAULT_TMAX,
              equilibria: Sequence = (), **kwargs) -> Trajectory:
    return integrate_batch(field, [x0], dt, t_max, equilibria, **kwargs)[0]


def step_size_check(field: VectorField, x0, dt: float, horizon: float = 5.0, tol: float = 1e-6) -> float:
    """Endpoint change from halving ``dt`` over ``horizon``; raises StepSizeError above ``tol``."""
    X = np.array(x0, dtype=float).reshape(1, 2)
    Y = X.copy()
    steps = int(round(horizon / dt))
    for _ in range(steps):
        X = rk4_step(field.evaluate, X, dt)
        if np.linalg.norm(X) > ESCAPE_RADIUS:
            return 0.0
    for _ in range(2 * steps):
        Y = rk4_step(field.evaluate, Y, 0.5 * dt)
    diff = float(np.linalg.norm(X - Y))
    if not diff < tol:
        raise StepSizeError(f"halving dt={dt:g} moves the endpoint by {diff:.3g} (> {tol:g})")
    return diff


def sample_d0(grid: RegionGrid, field: VectorField, n_samples: int, seed: int, attempts: int = 16) -> np.ndarray:
    """Deterministic initial conditions inside D0.

    Each sample draws a D0 cell uniformly (cells enumerated row by row, ``x1``
    fastest) and jitters inside it; a jittered point that falls outside D0 is
    redrawn up to ``attempts`` times before falling back to the cell centre.
    """
    cells = np.argwhere(grid.in_D0)
    if cells.shape[0] == 0:
        raise EmptyDomainError("D0 contains no grid cells")
    rng = SplitMix64(seed)
    dx, dy = grid.cell_size
    out = np.empty((n_samples, 2))
    for s in range(n_samples):
        j, i = cells[rng.below(cells.shape[0])]
        cx, cy = grid.xs[i], grid.ys[j]
        point = (cx, cy)
        for _ in range(attempts):
            trial = (cx + (rng.uniform() - 0.5) * dx, cy + (rng.uniform() - 0.5) * dy)
            if grid.contains_d0(field, trial):
                point = trial
                break
        out[s] = point
    return out


@dataclass
class BoaReport:
    n_samples: int
    converged: int
    tallies: list
    worst_final_distance: float
    failures: list
    max_energy_increase: float | None
    max_energy: float | None
    seed: int
    t_max: float
    dt: float
    step_check: float | None = None
    initial_states: np.ndarray = dc_field(default=None, repr=False)
    trajectories: list = dc_field(default_factory=list, repr=False)

    @property
    def fraction(self) -> float:
        return self.converged / self.n_samples if self.n_samples else 0.0

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "converged": self.converged,
            "fraction_converged": self.fraction,
            "tallies": self.tallies,
            "worst_final_distance": self.worst_final_distance,
            "failures": self.failures,
            "max_energy_increase": self.max_energy_increase,
            "max_energy": self.max_energy,
            "seed": self.seed,
            "t_max": self.t_max,
            "dt": self.dt,
            "step_check": self.step_check,
        }


def boa_validate(field: VectorField, grid: RegionGrid, eqs: Sequence, n_samples: int = 100, seed: int = 0,
                 t_max: float = DEFAULT_TMAX, dt: float = DEFAULT_DT, record_every: int = 10,
                 check_step: bool = True) -> BoaReport:
    """Simulate seeded D0 samples and tally which equilibrium each one reaches.

    Energy along every trajectory is monitored per step against the grid's
    energy spec, giving the largest single-step increase and the largest
    value reached.
    """
    if not eqs:
        raise EmptyDomainError("no equilibria registered for convergence checks")
    locs = [tuple(map(float, getattr(e, "location", e))) for e in eqs]
    X0 = sample_d0(grid, field, n_samples, seed)
    step = step_size_check(field, X0[0], dt, horizon=min(t_max, 5.0)) if check_step else None
    spec = grid.spec
    trajs = integrate_batch(field, X0, dt=dt, t_max=t_max, equilibria=locs, record_every=record_every,
                            energy_fn=(lambda X: energy(spec, X)) if spec is not None else None)
    tallies = [{"location": list(loc), "count": 0} for loc in locs]
    failures = []
    worst = 0.0
    for k, tr in enumerate(trajs):
        end = tr.final_state
        dist = min(math.hypot(end[0] - a, end[1] - b) for a, b in locs)
        worst = max(worst, dist)
        if tr.verdict == "converged":
            tallies[locs.index(tr.target)]["count"] += 1
        else:
            failures.append({"sample": k, "x0": X0[k].tolist(), "verdict": tr.verdict, "final": end.tolist()})
    inc = [tr.max_energy_increase for tr in trajs if tr.max_energy_increase is not None]
    emax = [tr.max_energy for tr in trajs if tr.max_energy is not None]
    return BoaReport(
        n_samples=n_samples,
        converged=sum(t["count"] for t in tallies),
        tallies=tallies,
        worst_final_distance=worst,
        failures=failures,
        max_energy_increase=max(inc) if inc else None,
        max_energy=max(emax) if emax else None,
        seed=seed,
        t_max=t_max,
        dt=dt,
        step_check=step,
        initial_states=X0,
        trajectories=trajs,
    )


@dataclass
class AreaSeries:
    times: np.ndarray
    z: np.ndarray
    predicted: np.ndarray
    restarts: int = 0


def area_evolution(field: VectorField, x0, y1, y2, dt: float = DEFAULT_DT, t_max: float = 5.0,
                   blowup: float = 1e12) -> AreaSeries:
    """Wedge ``z = y1 ^ y2`` of two tangent vectors carried by the variational flow.

    Alongside ``z(t)`` the series holds ``z(0) * exp(int_0^t trace J)``.
    Tangents growing beyond ``blowup`` are rescaled and the scale is folded
    back into the reported ``z``.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    z0 = float(y1[0] * y2[1] - y1[1] * y2[0])
    if abs(z0) <= 1e-12:
        raise DegenerateAreaError("tangent vectors are (nearly) parallel; z(0) = 0")

    def rhs(S):
        x = S[:2]
        J = field.jacobian(x)
        return np.concatenate([field.evaluate(x), J @ S[2:4], J @ S[4:6], [J[0, 0] + J[1, 1]]])

    S = np.concatenate([np.asarray(x0, dtype=float), y1, y2, [0.0]])
    steps = int(round(t_max / dt))
    times = np.arange(steps + 1) * dt
    z = np.empty(steps + 1)
    pred = np.empty(steps + 1)
    log_scale = 0.0
    restarts = 0
    z[0], pred[0] = z0, z0
    for k in range(1, steps + 1):
        S = rk4_step(rhs, S, dt)
        if not np.all(np.isfinite(S)):
            raise IntegrationError(f"non-finite variational state at t={k * dt:.6g}")
        big = max(np.abs(S[2:6]).max(), 1e-300)
        if big > blowup:
            S[2:6] /= big
            log_scale += 2.0 * math.log(big)
            restarts += 1
        z[k] = (S[2] * S[5] - S[3] * S[4]) * math.exp(log_scale)
        pred[k] = z0 * math.exp(S[6])
    return AreaSeries(times=times, z=z, predicted=pred, restarts=restarts)


@dataclass
class ProbeResult:
    verdict: str
    period: float | None = None

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "period": self.period}


def periodicity_probe(field: VectorField, x0, t_max: float = DEFAULT_TMAX, dt: float = DEFAULT_DT,
                      ball: float = 1e-4, ref_interval: float = 1.0, min_speed: float = 1e-2,
                      max_refs: int = 64) -> ProbeResult:
    """Look for a near-return of the trajectory to one of its earlier states.

    Reference states are taken every ``ref_interval`` time units wherever the
    speed is at least ``min_speed``. A return is a crossing, in the flow
    direction, of the line through a reference state normal to the flow
    there, landing within ``ball`` of it.
    """
    f = field.evaluate
    x = np.asarray(x0, dtype=float).reshape(1, 2)
    steps = int(round(t_max / dt))
    every = max(1, int(round(ref_interval / dt)))
    refs = np.empty((0, 2))
    normals = np.empty((0, 2))
    ref_times = np.empty(0)
    g_prev = np.empty(0)
    for k in range(steps + 1):
        t = k * dt
        if k:
            x_new = rk4_step(f, x, dt)
            if not np.all(np.isfinite(x_new)) or np.linalg.norm(x_new) > ESCAPE_RADIUS:
                return ProbeResult("no_recurrence")
            if refs.shape[0]:
                g_new = np.sum((x_new[0] - refs) * normals, axis=1)
                hit = (g_prev < 0) & (g_new >= 0)
                for r in np.flatnonzero(hit):
                    lam = g_prev[r] / (g_prev[r] - g_new[r])
                    xc = x[0] + lam * (x_new[0] - x[0])
                    if np.linalg.norm(xc - refs[r]) < ball:
                        return ProbeResult("recurrence_suspected", float(t - dt + lam * dt - ref_times[r]))
                g_prev = g_new
            x = x_new
        if k % every == 0:
            v = f(x[0])
            if math.hypot(*v) >= min_speed:
                refs = np.vstack([refs, x[0]])[-max_refs:]
                normals = np.vstack([normals, v])[-max_refs:]
                ref_times = np.append(ref_times, t)[-max_refs:]
                g_prev = np.append(g_prev, 0.0)[-max_refs:]
    return ProbeResult("no_recurrence")
