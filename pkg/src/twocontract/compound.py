"""Compound matrices and matrix measures for small dense matrices.

Index sequences are 1-based in the public API (``(1, 2)`` is the first
two rows), matching the usual textbook notation for compound matrices.
Internally everything is a 0-based numpy array.
"""

from __future__ import annotations

import enum
import itertools
import math
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "NormKind",
    "as_matrix",
    "lex_sequences",
    "minor",
    "multiplicative_compound",
    "additive_compound",
    "symmetric_eigenvalues",
    "matrix_measure",
    "compound_measure",
    "matrix_to_json",
    "matrix_from_json",
]


class NormKind(str, enum.Enum):
    ONE = "one"
    TWO = "two"
    INFINITY = "infinity"


def as_matrix(A) -> np.ndarray:
    """Coerce ``A`` to a finite 2-D float array, raising DomainError otherwise."""
    M = np.array(A, dtype=float)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DomainError(f"expected a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix entries must be finite")
    return M


def _square(A) -> np.ndarray:
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise DomainError(f"matrix must be square, got {M.shape[0]}x{M.shape[1]}")
    return M


def lex_sequences(k: int, n: int) -> list[tuple[int, ...]]:
    """All strictly increasing length-``k`` sequences from ``1..n``, lexicographically.

    >>> lex_sequences(2, 3)
    [(1, 2), (1, 3), (2, 3)]
    """
    if not (isinstance(k, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise DomainError("k and n must be integers")
    if n < 1 or k < 1 or k > n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    return list(itertools.combinations(range(1, n + 1), k))


def _det_small(S: np.ndarray) -> float:
    k = S.shape[0]
    if k == 1:
        return float(S[0, 0])
    if k == 2:
        return float(S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0])
    if k == 3:
        return float(
            S[0, 0] * (S[1, 1] * S[2, 2] - S[1, 2] * S[2, 1])
            - S[0, 1] * (S[1, 0] * S[2, 2] - S[1, 2] * S[2, 0])
            + S[0, 2] * (S[1, 0] * S[2, 1] - S[1, 1] * S[2, 0])
        )
    # LAPACK getrf: LU with partial pivoting
    return float(np.linalg.det(S))


def _check_sequence(seq: Sequence[int], limit: int, what: str) -> tuple[int, ...]:
    seq = tuple(int(i) for i in seq)
    if not seq:
        raise DomainError(f"{what} index sequence is empty")
    if any(b <= a for a, b in zip(seq, seq[1:])):
        raise DomainError(f"{what} indices must be strictly increasing: {seq}")
    if seq[0] < 1 or seq[-1] > limit:
        raise DomainError(f"{what} indices {seq} out of range 1..{limit}")
    return seq


def minor(A, rows: Sequence[int], cols: Sequence[int]) -> float:
    """Determinant of the submatrix of ``A`` picked by 1-based ``rows`` and ``cols``."""
    M = as_matrix(A)
    rows = _check_sequence(rows, M.shape[0], "row")
    cols = _check_sequence(cols, M.shape[1], "column")
    if len(rows) != len(cols):
        raise DomainError(f"row/column sequences differ in length: {len(rows)} vs {len(cols)}")
    sub = M[np.ix_([r - 1 for r in rows], [c - 1 for c in cols])]
    return _det_small(sub)


def multiplicative_compound(A, k: int) -> np.ndarray:
    """k-th multiplicative compound: the matrix of all order-k minors of ``A``.

    Rows and columns are indexed by :func:`lex_sequences` over the row and
    column counts of ``A`` respectively.
    """
    M = as_matrix(A)
    n, m = M.shape
    if not 1 <= k <= min(n, m):
        raise DomainError(f"k={k} outside 1..{min(n, m)}")
    row_seqs = lex_sequences(k, n)
    col_seqs = lex_sequences(k, m)
    out = np.empty((len(row_seqs), len(col_seqs)))
    for a, I in enumerate(row_seqs):
        ri = [i - 1 for i in I]
        for b, J in enumerate(col_seqs):
            out[a, b] = _det_small(M[np.ix_(ri, [j - 1 for j in J])])
    return out


def additive_compound(A, k: int) -> np.ndarray:
    """k-th additive compound, the first-order coefficient of ``(I + eps*A)^(k)``.

    Built entry by entry: the diagonal entry for index set ``I`` is the sum of
    ``a_ii`` over ``I``; when ``J`` is ``I`` with ``i_p`` swapped for ``j_s``
    the entry is ``(-1)**(p+s) * a[i_p, j_s]``; everything else is zero.
    """
    M = _square(A)
    n = M.shape[0]
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside 1..{n}")
    seqs = lex_sequences(k, n)
    position = {seq: idx for idx, seq in enumerate(seqs)}
    out = np.zeros((len(seqs), len(seqs)))
    for row, I in enumerate(seqs):
        out[row, row] = sum(M[i - 1, i - 1] for i in I)
        members = set(I)
        for p, ip in enumerate(I):
            for j in range(1, n + 1):
                if j in members:
                    continue
                J = tuple(sorted(I[:p] + I[p + 1:] + (j,)))
                s = J.index(j)
                sign = -1.0 if (p + s) % 2 else 1.0
                out[row, position[J]] = sign * M[ip - 1, j - 1]
    return out


def symmetric_eigenvalues(S, tol: float = 1e-12, max_sweeps: int = 64) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted descending.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``tol * max(1, ||S||_F)``.
    """
    a = _square(S).copy()
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise DomainError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)) * 2.0)
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))[::-1]


def _norm_kind(norm) -> NormKind:
    try:
        return NormKind(norm)
    except ValueError:
        raise DomainError(f"unknown norm {norm!r}; expected one of one/two/infinity") from None


def matrix_measure(A, norm="two") -> float:
    """Logarithmic norm (matrix measure) of a square matrix.

    ``one``: max over columns of ``a_jj + sum_{i != j} |a_ij|``;
    ``two``: largest eigenvalue of the symmetric part;
    ``infinity``: max over rows of ``a_ii + sum_{j != i} |a_ij|``.
    """
    M = _square(A)
    kind = _norm_kind(norm)
    if kind is NormKind.TWO:
        return float(symmetric_eigenvalues(0.5 * (M + M.T))[0])
    absM = np.abs(M)
    diag = np.diag(M)
    if kind is NormKind.ONE:
        off = absM.sum(axis=0) - np.abs(diag)
    else:
        off = absM.sum(axis=1) - np.abs(diag)
    return float(np.max(diag + off))


def compound_measure(A, k: int, norm="two") -> float:
    """Matrix measure of the k-th additive compound, without building it.

    For the 2-norm this is the sum of the ``k`` largest eigenvalues of the
    symmetric part of ``A``; for the 1- and infinity-norms it is a max over
    k-tuples of the diagonal sum plus the absolute column (row) sums outside
    the tuple.
    """
    M = _square(A)
    n = M.shape[0]
    kind = _norm_kind(norm)
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside 1..{n}")
    if k == n:
        # every norm collapses to the trace when A^[n] is the 1x1 matrix trace(A)
        return float(sum(M[i, i] for i in range(n)))
    if kind is NormKind.TWO:
        eig = symmetric_eigenvalues(0.5 * (M + M.T))
        return float(sum(eig[:k]))
    absM = np.abs(M)
    best = -math.inf
    for I in itertools.combinations(range(n), k):
        value = sum(M[i, i] for i in I)
        outside = [j for j in range(n) if j not in I]
        for i in I:
            if kind is NormKind.ONE:
                value += sum(absM[j, i] for j in outside)
            else:
                value += sum(absM[i, j] for j in outside)
        best = max(best, value)
    return float(best)


def matrix_to_json(A) -> dict:
    M = as_matrix(A)
    return {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "entries": [float(v) for v in M.ravel()]}


def matrix_from_json(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    entries: Iterable[float] = obj["entries"]
    entries = list(entries)
    if rows < 1 or cols < 1 or len(entries) != rows * cols:
        raise DomainError(f"{len(entries)} entries do not fill a {rows}x{cols} matrix")
    return as_matrix(np.reshape(entries, (rows, cols)))
