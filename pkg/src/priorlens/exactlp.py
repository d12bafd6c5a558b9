"""Exact feasibility over the rationals with an integer (fraction-free) simplex.

All inputs are integer matrices. Entries of the working tableau are kept as
integers scaled by the current basis determinant, so every pivot is an exact
integer division and no Fraction objects are created inside the loop.
Bland's rule guarantees termination on degenerate problems.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

MAX_ROWS = 64


class LPSizeError(ValueError):
    pass


def _as_int_rows(A) -> list[list[int]]:
    rows = []
    for r in A:
        row = []
        for v in r:
            iv = int(v)
            if iv != v:
                raise ValueError("exact LP takes integer data")
            row.append(iv)
        rows.append(row)
    return rows


def phase_one(A: Sequence[Sequence[int]], b: Sequence[int]) -> list[Fraction] | None:
    """Find y >= 0 with A y = b, or None if no such y exists.

    A is m x k (list of rows), b has length m.
    """
    A = _as_int_rows(A)
    b = [int(v) for v in b]
    m = len(b)
    if m == 0:
        return [Fraction(0)] * (len(A[0]) if A else 0)
    if m > MAX_ROWS:
        raise LPSizeError(f"{m} equality rows exceed the exact LP limit {MAX_ROWS}")
    k = len(A[0]) if A else 0
    if any(len(r) != k for r in A) or len(A) != m:
        raise ValueError("ragged constraint matrix")

    ncol = k + m
    T = []
    for i in range(m):
        s = -1 if b[i] < 0 else 1
        T.append([s * a for a in A[i]] + [1 if j == i else 0 for j in range(m)] + [s * b[i]])
    obj = [-sum(T[i][j] for i in range(m)) for j in range(k)] + [0] * m
    obj.append(-sum(T[i][-1] for i in range(m)))
    basis = [k + i for i in range(m)]
    D = 1

    while True:
        q = -1
        for j in range(ncol):
            if obj[j] < 0:
                q = j
                break
        if q < 0:
            break
        p = -1
        for i in range(m):
            a = T[i][q]
            if a <= 0:
                continue
            if p < 0:
                p = i
                continue
            lhs = T[i][-1] * T[p][q]
            rhs = T[p][-1] * a
            if lhs < rhs or (lhs == rhs and basis[i] < basis[p]):
                p = i
        if p < 0:  # pragma: no cover - phase one objective is bounded below
            raise ArithmeticError("unbounded phase-one problem")
        P = T[p][q]
        Tp = T[p]
        for i in range(m):
            if i == p:
                continue
            f = T[i][q]
            if f == 0:
                if P != D:
                    T[i] = [x * P // D for x in T[i]]
                continue
            T[i] = [(x * P - f * y) // D for x, y in zip(T[i], Tp)]
        f = obj[q]
        obj = [(x * P - f * y) // D for x, y in zip(obj, Tp)]
        D = P
        basis[p] = q

    if obj[-1] != 0:
        return None
    y = [Fraction(0)] * k
    for i, j in enumerate(basis):
        if j < k:
            y[j] = Fraction(T[i][-1], D)
    return y


def cone_contains(generators: Sequence[Sequence[int]], v: Sequence[int]) -> bool:
    """True iff v is a non-negative combination of the generator vectors."""
    v = [int(x) for x in v]
    if not any(v):
        return True
    if len(generators) == 0:
        return False
    d = len(v)
    A = [[int(g[i]) for g in generators] for i in range(d)]
    return phase_one(A, v) is not None


def strictly_feasible(rows: Sequence[Sequence[int]]) -> bool:
    """Is {w : r . w > 0 for every row r} non-empty?

    Gordan alternative: infeasible iff some non-zero y >= 0 has sum y_i r_i = 0.
    Checked incrementally: adding r keeps feasibility iff -r is not in the cone
    of the previous rows.
    """
    kept: list[list[int]] = []
    for r in rows:
        r = [int(x) for x in r]
        if not any(r):
            return False
        if cone_contains(kept, [-x for x in r]):
            return False
        kept.append(r)
    return True


def interior_point(rows: Sequence[Sequence[int]]) -> list[Fraction] | None:
    """A rational w with r . w >= 1 for every row, or None if the open cone is empty.

    Solved as phase one on w = u - v, R u - R v - s = 1 with u, v, s >= 0.
    """
    R = _as_int_rows(rows)
    if not R:
        return None
    d = len(R[0])
    m = len(R)
    A = []
    for i, r in enumerate(R):
        A.append(r + [-x for x in r] + [-1 if j == i else 0 for j in range(m)])
    y = phase_one(A, [1] * m)
    if y is None:
        return None
    return [y[j] - y[d + j] for j in range(d)]


def redundant_rows(rows: Sequence[Sequence[int]], protected: int = 0) -> list[int]:
    """Greedy irredundant reduction of a strict system.

    Rows with index < protected are always kept and never tested. A row is
    dropped when it lies in the cone of the rows still kept (then it is implied
    by them on the open cone). Returns the indices that were dropped.
    """
    R = _as_int_rows(rows)
    keep = list(range(len(R)))
    dropped = []
    for i in range(len(R) - 1, protected - 1, -1):
        others = [R[j] for j in keep if j != i]
        if cone_contains(others, R[i]):
            keep.remove(i)
            dropped.append(i)
    return sorted(dropped)
