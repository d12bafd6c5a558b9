"""Signatures, t_min, and decision trees of the linear conditions that pin down F_t.

A bias-free perceptron weight vector is written w = sigma * a with sign vector
sigma and magnitudes a_1 < a_2 < ... < a_n (ordering fixed to the identity).
Input x maps to 1 iff sum_i sigma_i x_i a_i > 0, so every decision is the sign
of an integer linear form in a. All feasibility questions are answered with the
exact cone-membership test from `exactlp`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .exactlp import cone_contains, interior_point, redundant_rows
from .hypercube import OutputPattern, bin_points

Signature = tuple[int, ...]

MAX_TREE_N = 8


def ordering_rows(n: int) -> list[tuple[int, ...]]:
    """Rows r with r . a > 0 encoding 0 < a_1 < a_2 < ... < a_n."""
    rows = [tuple(1 if j == 0 else 0 for j in range(n))]
    for i in range(1, n):
        rows.append(tuple(1 if j == i else -1 if j == i - 1 else 0 for j in range(n)))
    return rows


@dataclass(frozen=True)
class LinearCondition:
    """coeffs . a  (relation)  0, with the highest-index non-zero coefficient positive."""

    coeffs: tuple[int, ...]
    relation: str = ">"

    def __post_init__(self):
        c = tuple(int(v) for v in self.coeffs)
        if self.relation not in ("<", ">"):
            raise ValueError("relation must be '<' or '>'")
        nz = [i for i, v in enumerate(c) if v]
        if not nz:
            raise ValueError("condition needs a non-zero coefficient")
        rel = self.relation
        if c[nz[-1]] < 0:
            c = tuple(-v for v in c)
            rel = "<" if rel == ">" else ">"
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "relation", rel)

    @classmethod
    def from_row(cls, row: Sequence[int]) -> "LinearCondition":
        """Condition row . a > 0."""
        return cls(tuple(row), ">")

    def row(self) -> tuple[int, ...]:
        return self.coeffs if self.relation == ">" else tuple(-v for v in self.coeffs)

    def complement(self) -> "LinearCondition":
        return LinearCondition(self.coeffs, "<" if self.relation == ">" else ">")

    @property
    def size(self) -> int:
        return sum(1 for v in self.coeffs if v)

    @property
    def top(self) -> int:
        return max(i for i, v in enumerate(self.coeffs) if v)

    def holds(self, a: np.ndarray) -> np.ndarray:
        v = np.asarray(a, dtype=np.float64) @ np.asarray(self.coeffs, dtype=np.float64)
        return v > 0 if self.relation == ">" else v < 0

    def sort_key(self):
        rhs = tuple(i for i, v in enumerate(self.coeffs) if v < 0)
        return (-self.top, rhs, self.coeffs)

    def __str__(self):
        def side(sign):
            terms = []
            for i, v in enumerate(self.coeffs):
                if v * sign > 0:
                    k = abs(v)
                    terms.append(f"{k if k != 1 else ''}a{i + 1}")
            return "+".join(terms) or "0"
        return f"{side(1)}{self.relation}{side(-1)}"


def format_signature(sigma: Signature, width: int | None = None) -> str:
    s = sigma if width is None else sigma[:width]
    return "".join("+" if v > 0 else "-" for v in s)


# ---- t_min ---------------------------------------------------------------------

def forced_positive(sigma: Signature, x: Sequence[int]) -> bool:
    """Is sum_i sigma_i x_i a_i > 0 for every increasing positive a?

    True iff x has a positive-signed coordinate and its negative-signed
    coordinates can be matched to distinct positive-signed coordinates of
    larger index (each negative term is dominated by a larger positive one).
    """
    avail = 0
    any_pos = False
    for i in range(len(sigma) - 1, -1, -1):
        if not x[i]:
            continue
        if sigma[i] > 0:
            avail += 1
            any_pos = True
        elif avail:
            avail -= 1
        else:
            return False
    return any_pos


def t_min(sigma: Signature) -> int:
    """Number of hypercube points mapped to 1 for every magnitude vector consistent with the ordering."""
    n = len(sigma)
    return sum(forced_positive(sigma, x) for x in product((0, 1), repeat=n))


def t_max_special(k: int, n: int | None = None) -> int:
    """Largest T for the signature with a single positive sign at position k (1-based)."""
    if k < 1 or (n is not None and k > n):
        raise ValueError("k must lie in 1..n")
    return 2 ** (k - 1)


def single_positive(k: int, n: int) -> Signature:
    return tuple(1 if i == k - 1 else -1 for i in range(n))


def enumerate_signatures(n: int, t: int) -> list[Signature]:
    """Signatures with sigma_i = -1 for i > t and t_min(sigma) <= t, in bin order of the free signs."""
    if not 0 <= t < 2**n:
        raise ValueError("t outside [0, 2^n)")
    free = min(t, n)
    out = []
    for bits in product((0, 1), repeat=free):
        sigma = tuple(1 if b else -1 for b in bits) + (-1,) * (n - free)
        if t_min(sigma) <= t:
            out.append(sigma)
    return out


# ---- per-signature enumeration -------------------------------------------------

def _points_by_popcount(n: int) -> list[tuple[int, ...]]:
    X = bin_points(n).astype(int)
    order = sorted(range(1, 2**n), key=lambda i: (int(X[i].sum()), i))
    return [tuple(int(v) for v in X[i]) for i in order]


@dataclass
class Region:
    signature: Signature
    conditions: list[LinearCondition]

    def rows(self) -> list[tuple[int, ...]]:
        return [c.row() for c in self.conditions]


def signature_regions(sigma: Signature, t: int) -> list[Region]:
    """Cones of magnitude space on which sigma * a has exactly t ones.

    Points are visited by popcount then bin index. A point's output is implied
    when the opposite strict inequality is infeasible together with the
    ordering and the conditions chosen so far; otherwise both branches are
    explored and the chosen inequality is recorded. Branches stop as soon as
    more than t points map to 1. Each surviving region's conditions are then
    reduced to an irredundant set.
    """
    n = len(sigma)
    base = ordering_rows(n)
    pts = _points_by_popcount(n)
    out = []
    stack = [(0, (), 0)]
    while stack:
        i, conds, ones = stack.pop()
        if ones > t or ones + (len(pts) - i) < t:
            continue
        if i == len(pts):
            if ones == t:
                out.append(conds)
            continue
        u = tuple(s * x for s, x in zip(sigma, pts[i]))
        gens = base + list(conds)
        neg = tuple(-v for v in u)
        can1 = not cone_contains(gens, neg)
        can0 = not cone_contains(gens, u)
        if can1 and can0:
            stack.append((i + 1, conds + (neg,), ones))
            stack.append((i + 1, conds + (u,), ones + 1))
        elif can1:
            stack.append((i + 1, conds, ones + 1))
        elif can0:
            stack.append((i + 1, conds, ones))
    regions = []
    for conds in out:
        rows = base + list(conds)
        drop = set(redundant_rows(rows, protected=len(base)))
        kept = [LinearCondition.from_row(r) for j, r in enumerate(rows) if j >= len(base) and j not in drop]
        regions.append(Region(sigma, sorted(kept, key=LinearCondition.sort_key)))
    return regions


def leaf_regions(n: int, t: int) -> list[Region]:
    if n > MAX_TREE_N:
        raise ValueError(f"condition trees limited to n <= {MAX_TREE_N}")
    regions = []
    for sigma in enumerate_signatures(n, t):
        regions.extend(signature_regions(sigma, t))
    return regions


# ---- global decision tree --------------------------------------------------------

@dataclass
class TreeNode:
    condition: LinearCondition | None = None
    children: list["TreeNode"] = field(default_factory=list)
    signature: Signature | None = None
    leaf_conditions: list[LinearCondition] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return self.signature is not None

    def leaves(self) -> list["TreeNode"]:
        if self.is_leaf:
            return [self]
        return [x for c in self.children for x in c.leaves()]

    def paths(self, prefix=()):
        here = prefix + ((self.condition,) if self.condition is not None else ())
        if self.is_leaf:
            yield here, self
        for c in self.children:
            yield from c.paths(here)


@dataclass
class ConditionTree:
    n: int
    t: int
    root: TreeNode

    def leaves(self) -> list[TreeNode]:
        return self.root.leaves()

    def locate(self, a: np.ndarray) -> list[TreeNode]:
        """Leaves whose path conditions all hold at magnitude vector a."""
        hits = []
        for path, leaf in self.root.paths():
            if all(bool(c.holds(a)) for c in path):
                hits.append(leaf)
        return hits

    def to_dict(self) -> dict:
        width = max(1, min(self.t, self.n))

        def rec(node: TreeNode) -> dict:
            d = {"condition": None if node.condition is None else str(node.condition)}
            if node.is_leaf:
                d["signature"] = format_signature(node.signature, width)
                d["conditions"] = [str(c) for c in node.leaf_conditions]
            else:
                d["children"] = [rec(c) for c in node.children]
            return d

        return {"n": self.n, "t": self.t, "tree": rec(self.root)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def render(self) -> str:
        width = max(1, min(self.t, self.n))
        lines = []

        def rec(node: TreeNode, depth: int):
            ind = "  " * depth
            if node.condition is not None:
                lines.append(ind + str(node.condition))
                depth += 1
                ind = "  " * depth
            if node.is_leaf:
                lines.append(ind + format_signature(node.signature, width))
            for c in node.children:
                rec(c, depth)

        rec(self.root, 0)
        return "\n".join(lines)


def _side(rows: list, c: LinearCondition) -> str:
    if cone_contains(rows, c.coeffs):
        return ">"
    if cone_contains(rows, tuple(-v for v in c.coeffs)):
        return "<"
    return "both"


def _build(regions: list[Region], path: list, base: list, depth: int = 0) -> TreeNode:
    if len(regions) == 1:
        r = regions[0]
        return TreeNode(signature=r.signature, leaf_conditions=list(r.conditions))
    if depth > 64:
        raise RuntimeError("condition tree did not separate its regions")
    cands = {}
    for r in regions:
        for c in r.conditions:
            cands.setdefault(c.coeffs, LinearCondition(c.coeffs, ">"))
    ordered = sorted(cands.values(), key=LinearCondition.sort_key)
    sides = {}
    chosen = None
    for c in ordered:
        s = [_side(base + path + r.rows(), c) for r in regions]
        sides[c.coeffs] = s
        if "both" not in s and "<" in s and ">" in s:
            chosen = c
            break
    if chosen is None:
        # no clean split: take the first condition with regions strictly on both sides;
        # regions it crosses go down both branches, so each child still shrinks
        for c in ordered:
            s = sides[c.coeffs]
            if "<" in s and ">" in s:
                chosen = c
                break
        if chosen is None:
            raise RuntimeError("regions cannot be separated by their own conditions")
    s = sides[chosen.coeffs]
    children = []
    for rel in ("<", ">"):
        cond = LinearCondition(chosen.coeffs, rel)
        sub = [r for r, x in zip(regions, s) if x in (rel, "both")]
        if sub:
            child = _build(sub, path + [cond.row()], base, depth + 1)
            if child.condition is None:
                child.condition = cond
            else:
                child = TreeNode(condition=cond, children=[child])
            children.append(child)
    return TreeNode(children=children)


def build_condition_tree(n: int, t: int) -> ConditionTree:
    """Decision tree over the conditions separating the magnitude-space regions of F_t.

    Splits are chosen among the regions' own conditions: one that leaves every
    region on a single side, preferring the largest top index and then the
    smallest right-hand-side indices. The '<' branch is listed first.
    """
    if n > MAX_TREE_N:
        raise ValueError(f"condition trees limited to n <= {MAX_TREE_N}")
    regions = leaf_regions(n, t)
    if not regions:
        raise ValueError(f"no signature realizes t={t} at n={n}")
    return ConditionTree(n, t, _build(regions, [], ordering_rows(n)))


# ---- extremal construction ------------------------------------------------------

def chain_points(n: int) -> list[tuple[int, ...]]:
    return [tuple(1 if j < i else 0 for j in range(n)) for i in range(1, n + 1)]


def chain_weights(n: int) -> list[Fraction]:
    """Weights of the inductive chain construction, exact.

    w_1 = 1. For k >= 2, w_k starts at 0 and moves towards -S (S the prefix
    sum) until the chain point p_k's hyperplane is crossed; it stops halfway
    to the next hyperplane crossing, so no other point lies on a hyperplane.
    """
    if n < 2:
        raise ValueError("chain construction needs n >= 2")
    w = [Fraction(1)]
    for k in range(2, n + 1):
        S = sum(w)
        target = -S
        direction = 1 if target > 0 else -1
        # values of w_k at which some point with x_k = 1 sits on its hyperplane
        crossings = set()
        for x in product((0, 1), repeat=k - 1):
            crossings.add(-sum(wi for wi, xi in zip(w, x) if xi))
        beyond = [v for v in crossings if (v - target) * direction > 0]
        if beyond:
            nxt = min(beyond, key=lambda v: abs(v - target))
            w.append((target + nxt) / 2)
        else:
            w.append(target + direction)
    return w


def _pattern_rows(bits: np.ndarray, n: int) -> list[tuple[int, ...]]:
    X = bin_points(n).astype(int)
    rows = []
    for i in range(1, 2**n):
        s = 1 if bits[i] else -1
        rows.append(tuple(s * int(v) for v in X[i]))
    return rows


def chain_function(n: int) -> OutputPattern:
    """Pattern of the chain construction, with p_i = (1..1 (i ones), 0..0) mapped to (1 + (-1)^(i+1))/2.

    The chain constraints {s_i <p_i, w> > 0} are first solved by exact LP; an
    empty cone would falsify the construction and raises. The pattern itself is
    read off the exact rational chain weights, which certify it (no zero dot
    products, every chain label as required).
    """
    chain = [tuple((1 if i % 2 == 1 else -1) * v for v in p) for i, p in enumerate(chain_points(n), start=1)]
    if interior_point(chain) is None:
        raise ArithmeticError("chain constraints infeasible: construction failed")
    w = chain_weights(n)
    X = bin_points(n).astype(int)
    vals = [sum(wi * int(xi) for wi, xi in zip(w, x)) for x in X]
    if any(v == 0 for v in vals[1:]):
        raise ArithmeticError("chain weights are not generic")
    bits = np.array([v > 0 for v in vals])
    for i, p in enumerate(chain_points(n), start=1):
        idx = int("".join(map(str, p)), 2)
        if bits[idx] != (i % 2 == 1):
            raise ArithmeticError(f"chain point p_{i} has the wrong label")
    return OutputPattern.from_bits(bits)


def realizing_weights(pattern: OutputPattern, n: int) -> list[Fraction] | None:
    """Exact w with 1(<w, x> > 0) = pattern on hypercube01, margins >= 1; None if not a threshold pattern."""
    bits = pattern.bits()
    if pattern.m != 2**n:
        raise ValueError("pattern must be over hypercube01")
    if bits[0]:
        return None
    return interior_point(_pattern_rows(bits, n))


def facet_points(pattern: OutputPattern, n: int) -> list[tuple[int, ...]]:
    """Hypercube points whose hyperplanes bound the pattern's weight cone (irredundant rows)."""
    bits = pattern.bits()
    rows = _pattern_rows(bits, n)
    drop = set(redundant_rows(rows))
    X = bin_points(n).astype(int)
    return [tuple(int(v) for v in X[i + 1]) for i in range(len(rows)) if i not in drop]


def upsilon_facets(pattern: OutputPattern, n: int) -> int:
    """Facets involving more than two weights."""
    return sum(1 for p in facet_points(pattern, n) if sum(p) >= 3)
