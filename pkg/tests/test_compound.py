import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from twocontract.compound import (additive_compound, compound_measure, lex_sequences, matrix_from_json,
                                  matrix_measure, matrix_to_json, minor, multiplicative_compound,
                                  symmetric_eigenvalues)
from twocontract.errors import DomainError

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def square(n):
    return arrays(np.float64, (n, n), elements=finite)


# frozen from exact symbolic expansion of the order-k minors of I + eps*A (tests/oracles/generate.py)
A3 = [[1, 2, 3], [4, 5, 6], [7, 8, 10]]
A3_K2 = [[6, 6, -3], [8, 11, 2], [-7, 4, 15]]
A4 = [[2, -1, 0, 3], [1, 4, -2, 0], [0, 5, -3, 1], [-1, 0, 2, 6]]
A4_K2 = [[6, -2, 0, 0, -3, 0], [5, -1, 1, -1, 0, -3], [0, 2, 8, 0, -1, 0],
         [0, 1, 0, 1, 1, 0], [1, 0, 1, 2, 10, -2], [0, 1, 0, 0, 5, 3]]
A4_K3 = [[3, 1, 0, 3], [2, 12, -2, 0], [0, 5, 5, -1], [-1, 0, 1, 7]]


def test_lex_sequences_small():
    assert lex_sequences(2, 3) == [(1, 2), (1, 3), (2, 3)]
    assert lex_sequences(3, 3) == [(1, 2, 3)]


@given(st.integers(1, 7), st.integers(1, 7))
def test_lex_sequences_count_and_order(k, n):
    if k > n:
        with pytest.raises(DomainError):
            lex_sequences(k, n)
        return
    seqs = lex_sequences(k, n)
    assert len(seqs) == math.comb(n, k)
    assert seqs == sorted(seqs)
    assert all(all(a < b for a, b in zip(s, s[1:])) for s in seqs)


@pytest.mark.parametrize("k,n", [(0, 3), (-1, 2), (2.0, 3)])
def test_lex_sequences_rejects_bad_arguments(k, n):
    with pytest.raises(DomainError):
        lex_sequences(k, n)


def test_minor_of_rectangular_example():
    A = [[1, 6], [-7, 0], [5, 10]]
    assert minor(A, (1, 3), (1, 2)) == -20


@pytest.mark.parametrize("rows,cols", [((0, 1), (1, 2)), ((2, 1), (1, 2)), ((1, 4), (1, 2)), ((1,), (1, 2)), ((), ())])
def test_minor_rejects_bad_sequences(rows, cols):
    with pytest.raises(DomainError):
        minor([[1, 6], [-7, 0], [5, 10]], rows, cols)


def test_non_finite_matrix_rejected():
    with pytest.raises(DomainError):
        multiplicative_compound([[1, np.nan], [0, 1]], 1)


@given(square(4))
def test_multiplicative_compound_endpoints(A):
    assert np.array_equal(multiplicative_compound(A, 1), A)
    assert multiplicative_compound(A, 4)[0, 0] == pytest.approx(np.linalg.det(A), rel=1e-9, abs=1e-6)


def test_multiplicative_compound_of_identity_is_identity():
    assert np.array_equal(multiplicative_compound(np.eye(5), 3), np.eye(10))


@settings(max_examples=40)
@given(square(4), square(4), st.integers(1, 4))
def test_cauchy_binet_property(A, B, k):
    lhs = multiplicative_compound(A @ B, k)
    rhs = multiplicative_compound(A, k) @ multiplicative_compound(B, k)
    assert np.allclose(lhs, rhs, rtol=1e-8, atol=1e-8 * max(1.0, np.abs(rhs).max()))


def test_additive_compound_frozen_values():
    assert np.array_equal(additive_compound(A3, 2), A3_K2)
    assert np.array_equal(additive_compound(A4, 2), A4_K2)
    assert np.array_equal(additive_compound(A4, 3), A4_K3)


def test_additive_compound_of_diagonal():
    C = additive_compound(np.diag([1.0, 2.0, 3.0]), 2)
    assert np.array_equal(C, np.diag([3.0, 4.0, 5.0]))


@given(square(3))
def test_additive_compound_endpoints(A):
    assert np.array_equal(additive_compound(A, 1), A)
    assert additive_compound(A, 3)[0, 0] == pytest.approx(np.trace(A), abs=1e-12)


@given(square(4), square(4), st.integers(1, 4))
def test_additive_compound_is_linear(A, B, k):
    assert np.allclose(additive_compound(A + B, k), additive_compound(A, k) + additive_compound(B, k), atol=1e-12)


@given(square(4))
def test_additive_compound_eigenvalues_are_pair_sums(A):
    # eigenvalues of A^[2] are the sums lambda_i + lambda_j, i < j (loose: defective A loses digits)
    lam = np.linalg.eigvals(A)
    expected = np.sort_complex(np.array([a + b for a, b in itertools.combinations(lam, 2)]))
    got = np.sort_complex(np.linalg.eigvals(additive_compound(A, 2)))
    scale = max(1.0, np.abs(A).max())
    assert np.allclose(np.sort(expected.real), np.sort(got.real), atol=1e-3 * scale)


@settings(max_examples=30)
@given(arrays(np.float64, (5, 5), elements=st.floats(-5, 5)))
def test_jacobi_matches_lapack(A):
    S = 0.5 * (A + A.T)
    assert np.allclose(symmetric_eigenvalues(S), np.linalg.eigvalsh(S)[::-1], atol=1e-9)


def test_measure_examples():
    A = [[-2, 1], [0, -3]]
    assert matrix_measure(A, "one") == -2
    assert matrix_measure(A, "infinity") == -1
    assert compound_measure(np.diag([-1.0, -2.0, -3.0]), 2, "two") == pytest.approx(-3.0, abs=1e-15)


def test_unknown_norm():
    with pytest.raises(DomainError):
        matrix_measure(np.eye(2), "frobenius")


@given(square(2), st.sampled_from(["one", "two", "infinity"]))
def test_planar_compound_measure_is_trace(A, norm):
    assert compound_measure(A, 2, norm) == A[0, 0] + A[1, 1]


@settings(max_examples=40)
@given(square(4), st.integers(1, 4), st.sampled_from(["one", "two", "infinity"]))
def test_compound_measure_matches_explicit_compound(A, k, norm):
    direct = matrix_measure(additive_compound(A, k), norm)
    assert compound_measure(A, k, norm) == pytest.approx(direct, abs=1e-8 * max(1.0, abs(direct)))


@given(square(3), square(3), st.sampled_from(["one", "two", "infinity"]))
def test_measure_is_subadditive_and_bounds_spectrum(A, B, norm):
    tol = 1e-9 * max(1.0, np.abs(A).max(), np.abs(B).max())
    assert matrix_measure(A + B, norm) <= matrix_measure(A, norm) + matrix_measure(B, norm) + tol
    assert np.max(np.linalg.eigvals(A).real) <= matrix_measure(A, norm) + 1e-4 * max(1.0, np.abs(A).max())


def test_json_round_trip():
    A = np.array([[1.5, -2.0, 0.0], [3.0, 4.0, 1e-12]])
    assert np.array_equal(matrix_from_json(matrix_to_json(A)), A)
    with pytest.raises(DomainError):
        matrix_from_json({"rows": 2, "cols": 2, "entries": [1, 2, 3]})
