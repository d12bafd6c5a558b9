"""Exact small-n ground truth: realizable threshold patterns, |F_t|, and the sign-assignment bijection."""

from __future__ import annotations

import csv
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

import numpy as np

from .exactlp import cone_contains
from .hypercube import InputSet, OutputPattern, build_input_set

MAX_ORACLE_POINTS = 32


class DegenerateMagnitudes(ValueError):
    pass


def _integer_rows(points: np.ndarray, with_bias: bool) -> list[tuple[int, ...]]:
    rows = []
    for x in points:
        fr = [Fraction(float(v)) for v in x]
        if with_bias:
            fr.append(Fraction(1))
        den = lcm(*[f.denominator for f in fr]) if fr else 1
        rows.append(tuple(int(f * den) for f in fr))
    return rows


def _dot(a, b) -> int:
    return sum(x * y for x, y in zip(a, b))


def enumerate_threshold_patterns(inputs: InputSet, with_bias: bool = False,
                                 t: int | None = None) -> set[OutputPattern]:
    """All patterns 1(<w,x> + b > 0) realizable on an open set of parameters.

    Depth-first over points in input-set order. A point's label is forced when
    the opposite strict inequality is inconsistent with the rows chosen so far
    (exact cone-membership test). Points whose augmented row is zero (the origin
    without bias) always output 0. If t is given, only patterns with that many
    ones are produced.
    """
    if inputs.m > MAX_ORACLE_POINTS:
        raise ValueError(f"exact enumeration limited to m <= {MAX_ORACLE_POINTS}")
    rows = _integer_rows(inputs.points, with_bias)
    m = inputs.m
    out: set[OutputPattern] = set()

    # stack entries: (next point, generator rows, bit value, ones)
    stack: list[tuple[int, tuple, int, int]] = [(0, (), 0, 0)]
    while stack:
        i, gens, value, ones = stack.pop()
        if t is not None and (ones > t or ones + (m - i) < t):
            continue
        if i == m:
            out.add(OutputPattern.from_int(value, m))
            continue
        u = rows[i]
        if not any(u):
            stack.append((i + 1, gens, value, ones))
            continue
        neg = tuple(-x for x in u)
        can1 = not cone_contains(gens, neg)
        can0 = not cone_contains(gens, u) if can1 else True
        if can1 and can0:
            stack.append((i + 1, gens + (neg,), value, ones))
            stack.append((i + 1, gens + (u,), value | (1 << i), ones + 1))
        elif can1:
            stack.append((i + 1, gens, value | (1 << i), ones + 1))
        else:
            stack.append((i + 1, gens, value, ones))
    return out


def class_sizes(patterns: Iterable[OutputPattern]) -> dict[int, int]:
    sizes: dict[int, int] = {}
    for p in patterns:
        sizes[p.t] = sizes.get(p.t, 0) + 1
    return dict(sorted(sizes.items()))


def is_generic(a: Sequence[float]) -> bool:
    """No non-empty signed subsum sum_i eps_i a_i (eps in {-1, 0, 1}) vanishes.

    Exactly the condition for every sign assignment to give a weight vector with
    no zero dot product on the hypercube.
    """
    a = np.asarray(a, dtype=np.float64)
    sums = np.zeros(1)
    for v in a:
        sums = np.concatenate([sums - v, sums, sums + v])
    tol = 1e-9 * max(1.0, float(np.abs(a).sum()))
    zero = np.abs(sums) <= tol
    return int(zero.sum()) == 1  # only the empty combination


def bijectivity_check(a: Sequence[float]) -> bool:
    """Do the 2^n sign assignments of magnitudes a realize every T in 0..2^n - 1 exactly once?"""
    a = np.asarray(a, dtype=np.float64)
    if (a <= 0).any():
        raise DegenerateMagnitudes("magnitudes must be strictly positive")
    if not is_generic(a):
        raise DegenerateMagnitudes("non-generic magnitudes: a non-empty signed subsum vanishes")
    n = a.size
    X = build_input_set(n).points
    signs = 2.0 * build_input_set(n).points - 1.0
    T = ((signs * a) @ X.T > 0).sum(axis=1)
    return bool(np.array_equal(np.sort(T), np.arange(2**n)))


def write_patterns(path, patterns: Iterable[OutputPattern], m: int) -> None:
    with open(path, "w") as fh:
        fh.write(f"# m={m}\n")
        for p in sorted(patterns, key=lambda p: p.to_int()):
            fh.write(p.hex() + "\n")


def read_patterns(path, m: int | None = None) -> list[OutputPattern]:
    pats = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("m="):
                        m = int(tok[2:])
                continue
            if m is None:
                raise ValueError("pattern file needs an '# m=<len>' header or an explicit m")
            pats.append(OutputPattern.from_hex(line.split(",")[0], m))
    return pats


def write_class_sizes(path, sizes: dict[int, int], meta: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "size"])
        for t, s in sorted(sizes.items()):
            w.writerow([t, s])
