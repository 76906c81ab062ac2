import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twocontract.errors import CurveError, CurveThroughEquilibriumError, IndexAmbiguityError
from twocontract.poincare import (Circle, Polyline, quarter_turn_table, index_additivity_check, local_circle_radius,
                                  table_to_csv, winding_number)
from twocontract.systems import FamilyParams, NetworkParams, PolynomialField, family_to_field, network_to_field

EX1 = family_to_field(FamilyParams(1, -1, 1, 0))
EX2 = family_to_field(FamilyParams(4, 3, 1, -3, s=1, m=1, q=0))
OPINION = network_to_field(NetworkParams(delta=(0.2, 0.4), W=((0, 0.5), (0.7, 0)), pi=2.0))


def dense_index(field, center, radius, n=100_000):
    """Brute-force oracle: unwrap the field angle at n points on the circle."""
    theta = np.linspace(0.0, 2 * np.pi, n + 1)
    pts = np.stack([center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)], axis=-1)
    f = field(pts)
    phi = np.arctan2(f[:, 1], f[:, 0])
    d = np.angle(np.exp(1j * np.diff(phi)))
    return sum(d) / (2 * np.pi)


class Rotation:
    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([-x[..., 1], x[..., 0]], axis=-1)


class Jump:
    """Direction flips by exactly half a turn across x1 = 0.3."""

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([1.0 if x[0] > 0.3 else -1.0, 0.0])


@pytest.mark.parametrize("center,radius,expected", [((0, 0), 4.0, 1), ((0, 0), 0.5, -1), ((5, 5), 0.5, 0),
                                                    ((1, 0), 0.5, 1), ((-1, 0), 0.3, 1)])
def test_example1_indices_match_dense_oracle(center, radius, expected):
    oracle = dense_index(EX1, center, radius)
    assert oracle == pytest.approx(expected, abs=1e-9)
    assert winding_number(EX1, Circle(center, radius)).index == expected


def test_example2_and_opinion_enclosing_index():
    assert winding_number(EX2, Circle((0, 0), 4.0)).index == 1
    assert winding_number(OPINION, Circle((0, 0), 9.0)).index == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(16, 400), st.floats(1.5, 8.0))
def test_index_invariant_to_samples_and_radius(samples, radius):
    assert winding_number(EX1, Circle((0, 0), radius), initial_samples=samples).index == 1


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.9))
def test_saddle_index_invariant_to_radius(radius):
    assert winding_number(EX1, Circle((0, 0), radius)).index == -1


@pytest.mark.parametrize("center,radius", [((0, 0), 4.0), ((0, 0), 0.5), ((1, 0), 0.3)])
def test_orientation_reversal_negates(center, radius):
    c = Circle(center, radius)
    fwd = winding_number(EX1, c)
    back = winding_number(EX1, c.reversed())
    assert back.index == -fwd.index
    assert back.total_angle_change == pytest.approx(-fwd.total_angle_change, abs=1e-9)


def test_polyline_curves():
    square = [(2, -2), (2, 0), (2, 2), (0, 2), (-2, 2), (-2, 0), (-2, -2), (0, -2)]
    sq = Polyline(square)
    assert sq.signed_area == pytest.approx(16.0)
    assert winding_number(EX1, sq).index == 1
    assert winding_number(EX1, sq.reversed()).index == -1
    small = Polyline([(1 + 0.2 * math.cos(t), 0.2 * math.sin(t)) for t in np.linspace(0, 2 * np.pi, 12)[:-1]])
    assert winding_number(EX1, small).index == 1


def test_polyline_validation():
    with pytest.raises(CurveError):
        Polyline([(0, 0), (1, 0), (1, 1), (0, 1)])
    bowtie = [(0, 0), (1, 1), (2, 2), (2, 1), (2, 0), (1, -0.5), (1, 2), (0, 2)]
    with pytest.raises(CurveError):
        Polyline(bowtie)
    crossing = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (3, 1)]
    with pytest.raises(CurveError):
        Polyline(crossing)


def test_circle_validation():
    for r in (0.0, -1.0, math.nan, math.inf):
        with pytest.raises(CurveError):
            Circle((0, 0), r)


def test_curve_through_equilibrium():
    with pytest.raises(CurveThroughEquilibriumError):
        winding_number(EX1, Circle((0, 0), 1.0))


def test_half_turn_jump_is_ambiguous():
    with pytest.raises(IndexAmbiguityError):
        winding_number(Jump(), Circle((0, 0), 1.0))


def test_too_few_samples_rejected():
    with pytest.raises(CurveError):
        winding_number(EX1, Circle((0, 0), 4.0), initial_samples=8)


def test_rotation_center_has_index_one():
    res = winding_number(Rotation(), Circle((0, 0), 1.0))
    assert res.index == 1 and res.total_angle_change == pytest.approx(2 * math.pi)


def test_refinement_handles_fast_turning():
    # x1' = x1^3 - 3 x1 x2^2, x2' = 3 x1^2 x2 - x2^3 has index +3 at the origin
    f = PolynomialField(component1=((1, 3, 0), (-3, 1, 2)), component2=((3, 2, 1), (-1, 0, 3)))
    res = winding_number(f, Circle((0, 0), 1.0), initial_samples=16)
    assert res.index == 3
    assert res.max_step_angle <= math.pi / 2


def test_quarter_turn_table_rows():
    rows = quarter_turn_table(EX1, 4.0)
    assert [r["theta_label"] for r in rows] == ["0", "pi/2", "pi", "3pi/2", "2pi"]
    assert [(r["f1"], r["f2"]) for r in rows] == [(0, -60), (4, -4), (0, 60), (-4, 4), (0, -60)]
    assert rows[0]["dphi_deg"] is None
    assert sum(r["dphi_deg"] for r in rows[1:]) == pytest.approx(360.0)
    csv_text = table_to_csv(rows)
    assert csv_text.splitlines()[0] == "theta_label,theta,f1,f2,phi_deg,dphi_deg"
    assert csv_text.splitlines()[1] == "0,0,0,-60,270,-"


def test_additivity_and_local_radius():
    eqs = [(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]
    assert local_circle_radius(eqs, 1) == 0.25
    assert local_circle_radius([(0.0, 0.0)], 0) == 0.5
    for r in (3.0, 4.0, 6.0):
        assert index_additivity_check(EX1, eqs, Circle((0, 0), r))
    # a curve around the saddle alone does not carry the total
    assert not index_additivity_check(EX1, eqs, Circle((0, 0), 0.5))
