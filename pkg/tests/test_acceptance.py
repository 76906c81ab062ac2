"""Acceptance gate: one group of tests per criterion, summarised at the end of the run."""

import json
import math

import numpy as np
import pytest

from twocontract.cli import main
from twocontract.compound import additive_compound, compound_measure, matrix_measure, multiplicative_compound
from twocontract.equilibria import classify, family_equilibria, find_equilibria
from twocontract.poincare import Circle, index_additivity_check, quarter_turn_table, winding_number
from twocontract.regions import (build_region_grid, energy_rate, energy_spec_for, equilibria_region_report,
                                 family_rate_closed_form, omega_label)
from twocontract.simulate import area_evolution, boa_validate
from twocontract.systems import FamilyParams, NetworkParams, family_to_field, network_to_field

EX1 = FamilyParams(1, -1, 1, 0, s=1)
EX2 = FamilyParams(4, 3, 1, -3, s=1, m=1, q=0)
EX3 = FamilyParams(4, 3, 1, 3, s=1, m=1, q=0)
OPINION = NetworkParams(delta=(0.2, 0.4), W=((0, 0.5), (0.7, 0)), pi=2.0)


@pytest.fixture(scope="module")
def ex1():
    return family_to_field(EX1)


@pytest.fixture(scope="module")
def ex2():
    return family_to_field(EX2)


@pytest.fixture(scope="module")
def opinion():
    return network_to_field(OPINION)


def _boa(field, r, bbox, eqs, n=100, t_max=50.0):
    spec = energy_spec_for(field, r)
    grid = build_region_grid(field, spec, bbox, 100, 100)
    return boa_validate(field, grid, eqs, n_samples=n, seed=0, t_max=t_max)


@pytest.fixture(scope="module")
def ex1_boa(ex1):
    eqs = family_equilibria(EX1)
    return {r: _boa(ex1, r, (-3, 3, -3, 3), eqs) for r in (0.0, 1.0, 2.0, 4.0)}


@pytest.fixture(scope="module")
def ex2_boa(ex2):
    return _boa(ex2, -1.75, (-4, 4, -4, 4), family_equilibria(EX2))


# --- 1 ---------------------------------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_radius4_index_and_angle(ex1):
    res = winding_number(ex1, Circle((0.0, 0.0), 4.0))
    assert res.index == 1
    assert abs(res.total_angle_change - 2 * math.pi) <= 0.01


@pytest.mark.criterion(1)
def test_quarter_turn_table(ex1):
    rows = quarter_turn_table(ex1, radius=4.0)
    expected = [(0, -60, 270), (4, -4, 315), (0, 60, 90), (-4, 4, 135), (0, -60, 270)]
    assert [(r["f1"], r["f2"], r["phi_deg"]) for r in rows] == expected
    increments = [r["dphi_deg"] for r in rows[1:]]
    assert increments == pytest.approx([45, 135, 45, 135], abs=1.0)


@pytest.mark.criterion(1)
def test_index_command_table(tmp_path):
    assert main(["index", "--system", "example1", "--radius", "4", "--table", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "index_table.csv").read_text().splitlines()
    assert lines[1].split(",")[2:5] == ["0", "-60", "270"]
    assert [ln.split(",")[-1] for ln in lines[2:]] == ["+45", "+135", "+45", "+135"]


# --- 2 ---------------------------------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_per_equilibrium_indices(ex1):
    eqs = classify(family_equilibria(EX1), ex1, lambda x: omega_label(ex1, x))
    by_loc = {tuple(round(v, 9) + 0.0 for v in e.location): e.index for e in eqs}
    assert by_loc == {(0.0, 0.0): -1, (1.0, 0.0): 1, (-1.0, 0.0): 1}


@pytest.mark.criterion(2)
@pytest.mark.parametrize("radius", [3.0, 4.0, 6.0])
def test_index_additivity(ex1, radius):
    eqs = [e.location for e in family_equilibria(EX1)]
    curve = Circle((0.0, 0.0), radius)
    assert winding_number(ex1, curve).index == 1
    assert index_additivity_check(ex1, eqs, curve)


# --- 3 ---------------------------------------------------------------------------------------------

@pytest.mark.criterion(3)
def test_example2_raster_matches_predicate(ex2):
    grid = build_region_grid(ex2, energy_spec_for(ex2, -1.75), (-4, 4, -4, 4), 100, 100)
    X = grid.centers[..., 0]
    g = 1.0 - X ** 2
    decided = np.abs(g) > 1e-9
    assert decided.sum() > 0.9 * g.size
    assert np.array_equal((grid.codes == 0)[decided], (g < 0)[decided])


@pytest.mark.criterion(3)
def test_example2_equilibrium_regions(ex2):
    report = equilibria_region_report(family_equilibria(EX2), lambda x: omega_label(ex2, x))
    regions = {tuple(e["location"]): e["region"] for e in report["equilibria"]}
    assert regions == {(-2.0, 0.0): "Omega", (0.0, 0.0): "Omega1", (2.0, 0.0): "Omega"}
    assert report["warnings"] == []


# --- 4 ---------------------------------------------------------------------------------------------

@pytest.mark.criterion(4)
def test_example3_has_no_omega(tmp_path):
    assert main(["analyze", "--system", "example3", "--bbox", "-5,5,-5,5", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["regions"]["counts"]["Omega"] == 0
    assert report["verdict"] == "no_omega"
    assert report["d0"] is None and report["boa"] is None
    assert not list(tmp_path.glob("traj_*.csv"))


# --- 5 ---------------------------------------------------------------------------------------------

@pytest.mark.criterion(5)
@pytest.mark.parametrize("r", [0.0, 1.0, 2.0, 4.0])
def test_example1_basin(ex1_boa, r):
    rep = ex1_boa[r]
    assert rep.n_samples == 100
    assert rep.converged == 100, rep.failures
    assert rep.fraction == 1.0
    targets = {tuple(t["location"]) for t in rep.tallies if t["count"]}
    assert targets <= {(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)}


# --- 6 ---------------------------------------------------------------------------------------------

@pytest.mark.criterion(6)
def test_example2_basin(ex2_boa):
    rep = ex2_boa
    assert rep.converged == 100, rep.failures
    stable = sum(t["count"] for t in rep.tallies if t["location"][0] != 0.0)
    assert stable >= 95


# --- 7 ---------------------------------------------------------------------------------------------

@pytest.mark.criterion(7)
def test_opinion_roots(opinion):
    eqs = find_equilibria(opinion, (-8, 8, -8, 8), seeds_per_axis=15)
    locs = sorted(e.location for e in eqs)
    assert len(locs) == 3
    assert np.allclose(locs[0], (-4.99, -3.499), atol=0.01)
    assert np.allclose(locs[1], (0.0, 0.0), atol=1e-10)
    assert np.allclose(locs[2], (4.99, 3.499), atol=0.01)


@pytest.mark.criterion(7)
def test_opinion_trace_constant(opinion):
    pts = np.random.default_rng(7).uniform(-20, 20, size=(100, 2))
    assert np.allclose(opinion.trace_j2(pts), -0.6, rtol=0, atol=1e-12)


@pytest.mark.criterion(7)
def test_opinion_samples_converge(opinion):
    eqs = find_equilibria(opinion, (-8, 8, -8, 8))
    rep = _boa(opinion, 32.0, (-10, 10, -10, 10), eqs, n=20, t_max=100.0)
    assert rep.converged == 20, rep.failures


# --- 8 ---------------------------------------------------------------------------------------------

@pytest.mark.criterion(8)
def test_cauchy_binet():
    rng = np.random.default_rng(8)
    for _ in range(50):
        A, B = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
        lhs = multiplicative_compound(A @ B, 2)
        rhs = multiplicative_compound(A, 2) @ multiplicative_compound(B, 2)
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)


@pytest.mark.criterion(8)
def test_additive_compound_first_order_convergence():
    rng = np.random.default_rng(81)
    for _ in range(10):
        A = rng.normal(size=(4, 4))
        exact = additive_compound(A, 2)
        errs = []
        for eps in (1e-2, 5e-3, 2.5e-3, 1.25e-3):
            fd = (multiplicative_compound(np.eye(4) + eps * A, 2) - np.eye(6)) / eps
            errs.append(np.abs(fd - exact).max())
        ratios = [errs[i] / errs[i + 1] for i in range(3)]
        assert all(1.8 < q < 2.2 for q in ratios), ratios
        assert errs[-1] < 1e-1


@pytest.mark.criterion(8)
def test_planar_additive_compound_is_trace():
    rng = np.random.default_rng(82)
    for _ in range(50):
        A = rng.normal(size=(2, 2))
        C = additive_compound(A, 2)
        assert C.shape == (1, 1) and C[0, 0] == A[0, 0] + A[1, 1]


# --- 9 ---------------------------------------------------------------------------------------------

@pytest.mark.criterion(9)
def test_two_norm_compound_measure():
    rng = np.random.default_rng(9)
    for _ in range(50):
        A = rng.normal(size=(5, 5))
        lam = np.linalg.eigvalsh(0.5 * (A + A.T))
        assert abs(compound_measure(A, 2, "two") - (lam[-1] + lam[-2])) <= 1e-9


@pytest.mark.criterion(9)
@pytest.mark.parametrize("norm,order", [("one", 1), ("infinity", np.inf)])
def test_measure_formulas_match_induced_norm_limit(norm, order):
    rng = np.random.default_rng(91)
    eps = 1e-7
    for _ in range(50):
        A = rng.normal(size=(5, 5))
        limit = (np.linalg.norm(np.eye(5) + eps * A, order) - 1.0) / eps
        assert abs(matrix_measure(A, norm) - limit) <= 1e-4


# --- 10 --------------------------------------------------------------------------------------------

@pytest.mark.criterion(10)
def test_area_law_example1(ex1):
    series = area_evolution(ex1, (0.5, 0.3), (1.0, 0.0), (0.0, 1.0), t_max=5.0)
    ratio = series.z / series.z[0]
    assert np.max(np.abs(ratio / np.exp(-series.times) - 1.0)) <= 1e-4


@pytest.mark.criterion(10)
def test_area_law_opinion(opinion):
    series = area_evolution(opinion, (3.0, -2.0), (1.0, 0.5), (-0.2, 1.0), t_max=5.0)
    ratio = series.z / series.z[0]
    assert np.max(np.abs(ratio / np.exp(-0.6 * series.times) - 1.0)) <= 1e-4


# --- 11 --------------------------------------------------------------------------------------------

@pytest.mark.criterion(11)
@pytest.mark.parametrize("params", [EX1, EX2, EX3], ids=["example1", "example2", "example3"])
def test_energy_rate_closed_form(params):
    field = family_to_field(params)
    spec = energy_spec_for(field, 0.0)
    pts = np.random.default_rng(11).uniform(-3, 3, size=(1000, 2))
    assert np.max(np.abs(energy_rate(spec, field, pts) - family_rate_closed_form(params, pts))) <= 1e-10


@pytest.mark.criterion(11)
def test_energy_monotone_along_basin_trajectories(ex1_boa, ex2_boa):
    for rep in list(ex1_boa.values()) + [ex2_boa]:
        assert rep.max_energy_increase is not None
        assert rep.max_energy_increase <= 1e-6


# --- 12 --------------------------------------------------------------------------------------------

@pytest.mark.criterion(12)
@pytest.mark.parametrize("preset", ["example1", "example3"])
def test_analyze_is_deterministic(tmp_path, preset):
    for run in ("a", "b"):
        assert main(["analyze", "--system", preset, "--out", str(tmp_path / run)]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
