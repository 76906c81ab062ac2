"""Planar vector fields with analytic Jacobians.

Three kinds are supported:

* ``polynomial`` -- arbitrary sums of monomials ``c * x1**i * x2**j`` per component;
* ``family`` -- the double-well family
  ``x1' = x2``, ``x2' = b1 x1 + b2 x2 - b3 x1^(2s+1) + b4 x1^(2m) x2^(2q+1)``;
* ``network`` -- two coupled agents ``x' = -Lambda x + pi W psi(x)``.

All evaluation methods broadcast over leading axes: ``x`` may be a single
point of shape ``(2,)`` or a batch of shape ``(..., 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np

from .errors import ConstructionError, FieldEvaluationError

__all__ = [
    "Monomial",
    "FamilyParams",
    "NetworkParams",
    "VectorField",
    "PolynomialField",
    "FamilyField",
    "NetworkField",
    "family_to_field",
    "network_to_field",
    "field_from_json",
    "field_to_json",
    "boltzmann",
]

MAX_POWER = 20
OVERFLOW_LIMIT = 1e300


def _ipow(base, n: int):
    """``base**n`` for a non-negative integer ``n`` by repeated squaring (``n == 0`` gives scalar 1.0)."""
    result = None
    factor = base
    while n:
        if n & 1:
            result = factor if result is None else result * factor
        n >>= 1
        if n:
            factor = factor * factor
    return 1.0 if result is None else result


def boltzmann(u):
    """``(1 - exp(-2u)) / (1 + exp(-2u))``, evaluated without overflow for negative ``u``."""
    u = np.asarray(u, dtype=float)
    e = np.exp(-2.0 * np.abs(u))
    return np.sign(u) * (1.0 - e) / (1.0 + e)


_PSI = {
    "tanh": np.tanh,
    "boltzmann": boltzmann,
}


@dataclass(frozen=True)
class Monomial:
    coefficient: float
    powers: tuple[int, int]

    def __post_init__(self):
        c = float(self.coefficient)
        if not np.isfinite(c):
            raise ConstructionError(f"monomial coefficient must be finite, got {self.coefficient}")
        p = tuple(int(v) for v in self.powers)
        if len(p) != 2 or any(v < 0 or v > MAX_POWER for v in p):
            raise ConstructionError(f"monomial powers must be two integers in 0..{MAX_POWER}, got {self.powers}")
        object.__setattr__(self, "coefficient", c)
        object.__setattr__(self, "powers", p)


@dataclass(frozen=True)
class FamilyParams:
    b1: float
    b2: float
    b3: float
    b4: float
    s: int = 1
    m: int = 0
    q: int = 0

    def __post_init__(self):
        for name in ("b1", "b2", "b3", "b4"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ConstructionError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        for name in ("s", "m", "q"):
            value = getattr(self, name)
            if int(value) != value:
                raise ConstructionError(f"{name} must be an integer, got {value}")
            object.__setattr__(self, name, int(value))
        if self.b1 <= 0 or self.b3 <= 0:
            raise ConstructionError("family requires b1 > 0 and b3 > 0")
        if self.s < 1:
            raise ConstructionError("family requires s >= 1")
        if self.m < 0 or self.q < 0:
            raise ConstructionError("family requires m, q >= 0")
        if 2 * self.s + 1 > MAX_POWER or 2 * self.m > MAX_POWER or 2 * self.q + 1 > MAX_POWER:
            raise ConstructionError(f"family exponents exceed the cap of {MAX_POWER}")


@dataclass(frozen=True)
class NetworkParams:
    delta: tuple[float, float]
    W: tuple[tuple[float, float], tuple[float, float]]
    pi: float
    psi: str = "tanh"

    def __post_init__(self):
        delta = tuple(float(d) for d in self.delta)
        W = np.array(self.W, dtype=float)
        if len(delta) != 2 or any(not np.isfinite(d) or d <= 0 for d in delta):
            raise ConstructionError(f"delta must be two positive reals, got {self.delta}")
        if W.shape != (2, 2) or not np.all(np.isfinite(W)):
            raise ConstructionError("W must be a finite 2x2 matrix")
        if np.any(W < 0):
            raise ConstructionError("W must be entrywise non-negative")
        if W[0, 0] != 0 or W[1, 1] != 0:
            raise ConstructionError("W must be hollow (zero diagonal)")
        pi = float(self.pi)
        if not np.isfinite(pi) or pi <= 0:
            raise ConstructionError(f"pi must be positive, got {self.pi}")
        if self.psi not in _PSI:
            raise ConstructionError(f"psi must be one of {sorted(_PSI)}, got {self.psi!r}")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "W", tuple(tuple(row) for row in W.tolist()))
        object.__setattr__(self, "pi", pi)

    @property
    def W_matrix(self) -> np.ndarray:
        return np.array(self.W)


def _split(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (2,):
        raise FieldEvaluationError(f"expected points with a trailing axis of length 2, got shape {x.shape}")
    return x[..., 0], x[..., 1]


def _assemble(values, shape, label: str) -> np.ndarray:
    """Pack component arrays into ``shape + (len(values),)``, raising on overflow or NaN."""
    out = np.empty(shape + (len(values),))
    for idx, comp in enumerate(values):
        out[..., idx] = comp
    # NaN fails the comparison as well
    if not np.abs(out).max(initial=0.0) <= OVERFLOW_LIMIT:
        bad = next(i for i in range(len(values)) if not np.abs(out[..., i]).max(initial=0.0) <= OVERFLOW_LIMIT)
        raise FieldEvaluationError(f"{label} component {bad + 1} overflowed (|value| > {OVERFLOW_LIMIT:g})")
    return out


class VectorField:
    """Base class; subclasses implement ``_rhs`` and ``_jac`` on coordinate arrays."""

    kind: str = "abstract"

    def evaluate(self, x) -> np.ndarray:
        x1, x2 = _split(x)
        with np.errstate(over="ignore", invalid="ignore"):
            return _assemble(self._rhs(x1, x2), x1.shape, "f")

    __call__ = evaluate

    def jacobian(self, x) -> np.ndarray:
        x1, x2 = _split(x)
        with np.errstate(over="ignore", invalid="ignore"):
            J = _assemble(self._jac(x1, x2), x1.shape, "jacobian")
        return J.reshape(x1.shape + (2, 2))

    def trace_j2(self, x):
        """Trace of the Jacobian, i.e. the (scalar) second additive compound for planar fields."""
        J = self.jacobian(x)
        t = J[..., 0, 0] + J[..., 1, 1]
        return float(t) if np.ndim(t) == 0 else t

    def _rhs(self, x1, x2):  # pragma: no cover - abstract
        raise NotImplementedError

    def _jac(self, x1, x2):  # pragma: no cover - abstract
        raise NotImplementedError

    def to_json(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


def _monomial(coef, x1, i, x2, j):
    value = coef
    if i:
        value = value * _ipow(x1, i)
    if j:
        value = value * _ipow(x2, j)
    return value


def _poly_eval(terms, x1, x2):
    total = np.zeros(np.broadcast(x1, x2).shape)
    for t in terms:
        total = total + _monomial(t.coefficient, x1, t.powers[0], x2, t.powers[1])
    return total


def _poly_partials(terms, x1, x2):
    d1 = np.zeros(np.broadcast(x1, x2).shape)
    d2 = np.zeros_like(d1)
    for t in terms:
        i, j = t.powers
        if i:
            d1 = d1 + _monomial(t.coefficient * i, x1, i - 1, x2, j)
        if j:
            d2 = d2 + _monomial(t.coefficient * j, x1, i, x2, j - 1)
    return d1, d2


@dataclass(frozen=True)
class PolynomialField(VectorField):
    component1: tuple[Monomial, ...] = ()
    component2: tuple[Monomial, ...] = ()
    kind: str = dc_field(default="polynomial", init=False)

    def __post_init__(self):
        for name in ("component1", "component2"):
            terms = tuple(t if isinstance(t, Monomial) else Monomial(t[0], (t[1], t[2])) for t in getattr(self, name))
            object.__setattr__(self, name, terms)

    def _rhs(self, x1, x2):
        return _poly_eval(self.component1, x1, x2), _poly_eval(self.component2, x1, x2)

    def _jac(self, x1, x2):
        j11, j12 = _poly_partials(self.component1, x1, x2)
        j21, j22 = _poly_partials(self.component2, x1, x2)
        return j11, j12, j21, j22

    def to_json(self) -> dict:
        return {
            "kind": "polynomial",
            "params": {
                "terms": [
                    [[t.coefficient, t.powers[0], t.powers[1]] for t in comp]
                    for comp in (self.component1, self.component2)
                ]
            },
        }


@dataclass(frozen=True)
class FamilyField(PolynomialField):
    params: FamilyParams | None = None
    kind: str = dc_field(default="family", init=False)

    def omega_expression(self, x):
        """``b2 + b4 (2q+1) x1^(2m) x2^(2q)``; its sign decides the contraction region."""
        p = self.params
        x1, x2 = _split(x)
        value = p.b2 + _monomial(p.b4 * (2 * p.q + 1), x1, 2 * p.m, x2, 2 * p.q) + np.zeros(np.shape(x1))
        return float(value) if np.ndim(value) == 0 else value

    def closed_form(self, x) -> np.ndarray:
        p = self.params
        x1, x2 = _split(x)
        f2 = p.b1 * x1 + p.b2 * x2 - p.b3 * x1 ** (2 * p.s + 1) + p.b4 * x1 ** (2 * p.m) * x2 ** (2 * p.q + 1)
        return np.stack(np.broadcast_arrays(x2, f2), axis=-1)

    def to_json(self) -> dict:
        p = self.params
        return {"kind": "family", "params": {"b1": p.b1, "b2": p.b2, "b3": p.b3, "b4": p.b4, "s": p.s, "m": p.m, "q": p.q}}


def family_to_field(params: FamilyParams) -> FamilyField:
    p = params
    comp2 = [
        Monomial(p.b1, (1, 0)),
        Monomial(p.b2, (0, 1)),
        Monomial(-p.b3, (2 * p.s + 1, 0)),
        Monomial(p.b4, (2 * p.m, 2 * p.q + 1)),
    ]
    return FamilyField(
        component1=(Monomial(1.0, (0, 1)),),
        component2=tuple(t for t in comp2 if t.coefficient != 0.0),
        params=params,
    )


@dataclass(frozen=True)
class NetworkField(VectorField):
    params: NetworkParams
    kind: str = dc_field(default="network", init=False)

    def _psi(self, u):
        return _PSI[self.params.psi](u)

    def _rhs(self, x1, x2):
        p = self.params
        (w11, w12), (w21, w22) = p.W
        s1, s2 = self._psi(x1), self._psi(x2)
        f1 = -p.delta[0] * x1 + p.pi * (w11 * s1 + w12 * s2)
        f2 = -p.delta[1] * x2 + p.pi * (w21 * s1 + w22 * s2)
        return f1, f2

    def _jac(self, x1, x2):
        p = self.params
        (w11, w12), (w21, w22) = p.W
        d1 = 1.0 - self._psi(x1) ** 2
        d2 = 1.0 - self._psi(x2) ** 2
        return (
            -p.delta[0] + p.pi * w11 * d1,
            p.pi * w12 * d2,
            p.pi * w21 * d1,
            -p.delta[1] + p.pi * w22 * d2,
        )

    def to_json(self) -> dict:
        p = self.params
        return {"kind": "network", "params": {"delta": list(p.delta), "W": [list(r) for r in p.W], "pi": p.pi, "psi": p.psi}}


def network_to_field(params: NetworkParams) -> NetworkField:
    return NetworkField(params=params)


def field_from_json(obj: dict[str, Any]) -> VectorField:
    """Build a field from ``{"kind": ..., "params": {...}}``."""
    try:
        kind = obj["kind"]
        params = obj["params"]
    except (KeyError, TypeError):
        raise ConstructionError("system definition needs 'kind' and 'params'") from None
    try:
        if kind == "family":
            return family_to_field(FamilyParams(**{k: params[k] for k in ("b1", "b2", "b3", "b4")},
                                                **{k: params.get(k, d) for k, d in (("s", 1), ("m", 0), ("q", 0))}))
        if kind == "network":
            return network_to_field(NetworkParams(delta=tuple(params["delta"]), W=params["W"],
                                                  pi=params["pi"], psi=params.get("psi", "tanh")))
        if kind == "polynomial":
            comps = params["terms"]
            if len(comps) != 2:
                raise ConstructionError("polynomial 'terms' needs exactly two component lists")
            return PolynomialField(
                component1=tuple(Monomial(c, (i, j)) for c, i, j in comps[0]),
                component2=tuple(Monomial(c, (i, j)) for c, i, j in comps[1]),
            )
    except KeyError as exc:
        raise ConstructionError(f"missing parameter {exc.args[0]!r} for kind {kind!r}") from None
    raise ConstructionError(f"unknown system kind {kind!r}")


def field_to_json(field: VectorField) -> dict:
    return field.to_json()
