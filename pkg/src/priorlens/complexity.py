"""Complexity of truth tables: LZ76 estimator, DNF/CNF formulas, Boolean-complexity bounds."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .hypercube import OutputPattern, bin_points


def _as_bitstring(bits) -> str:
    if isinstance(bits, OutputPattern):
        return str(bits)
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError("bit string must contain only 0/1")
        return bits
    return "".join("1" if b else "0" for b in np.asarray(bits, dtype=bool).reshape(-1))


def lz76_phrases(bits) -> int:
    """Phrase count of the exhaustive-history LZ76 parse; a trailing partial phrase counts."""
    s = _as_bitstring(bits)
    n = len(s)
    if n == 0:
        return 0
    c, i = 1, 1
    while i < n:
        L = 1
        # grow while s[i:i+L] already occurs in the history s[:i+L-1]
        while i + L <= n and s[i:i + L] in s[:i + L - 1]:
            L += 1
        c += 1
        i += L
    return c


def k_lz(bits) -> float:
    s = _as_bitstring(bits)
    m = len(s)
    if m < 2:
        raise ValueError("K_LZ needs at least two bits")
    if s.count(s[0]) == m:
        return float(np.log2(m))
    return float(np.log2(m) * (lz76_phrases(s) + lz76_phrases(s[::-1])) / 2)


# ---- formulas ----------------------------------------------------------------

class BoolFormula:
    connectives = 0

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """x: (N, n) 0/1 array -> (N,) bool."""
        raise NotImplementedError

    def leaves(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(BoolFormula):
    value: bool

    connectives = 0

    def evaluate(self, x):
        return np.full(np.asarray(x).shape[0], bool(self.value))

    def leaves(self):
        return 1

    def __str__(self):
        return "True" if self.value else "False"


@dataclass(frozen=True)
class Lit(BoolFormula):
    var: int
    negated: bool = False

    connectives = 0

    def evaluate(self, x):
        v = np.asarray(x)[:, self.var] > 0
        return ~v if self.negated else v

    def leaves(self):
        return 1

    def __str__(self):
        return ("¬" if self.negated else "") + f"x{self.var + 1}"


@dataclass(frozen=True)
class _Bin(BoolFormula):
    left: BoolFormula
    right: BoolFormula

    @property
    def connectives(self):
        return self.left.connectives + self.right.connectives + 1

    def leaves(self):
        return self.left.leaves() + self.right.leaves()


class And(_Bin):
    def evaluate(self, x):
        return self.left.evaluate(x) & self.right.evaluate(x)

    def __str__(self):
        return f"({self.left}∧{self.right})"


class Or(_Bin):
    def evaluate(self, x):
        return self.left.evaluate(x) | self.right.evaluate(x)

    def __str__(self):
        return f"({self.left}∨{self.right})"


def _fold(op, parts: Sequence[BoolFormula]) -> BoolFormula:
    out = parts[0]
    for p in parts[1:]:
        out = op(out, p)
    return out


def _bits_of(pattern: OutputPattern, n: int) -> np.ndarray:
    if pattern.m != 2**n:
        raise ValueError("pattern must be a truth table over hypercube01")
    return pattern.bits()


def dnf(pattern: OutputPattern, n: int) -> BoolFormula:
    """One n-literal clause per 1-input, OR-ed together."""
    bits = _bits_of(pattern, n)
    X = bin_points(n)
    ones = np.flatnonzero(bits)
    if ones.size == 0:
        return Const(False)
    clauses = [_fold(And, [Lit(j, negated=X[i, j] == 0) for j in range(n)]) for i in ones]
    return _fold(Or, clauses)


def cnf(pattern: OutputPattern, n: int) -> BoolFormula:
    """One n-literal clause per 0-input excluding it, AND-ed together."""
    bits = _bits_of(pattern, n)
    X = bin_points(n)
    zeros = np.flatnonzero(~bits)
    if zeros.size == 0:
        return Const(True)
    clauses = [_fold(Or, [Lit(j, negated=X[i, j] == 1) for j in range(n)]) for i in zeros]
    return _fold(And, clauses)


def truth_table(f: BoolFormula, n: int) -> OutputPattern:
    return OutputPattern.from_bits(f.evaluate(bin_points(n)))


def minimal_formula_sizes(n: int) -> dict[int, int]:
    """Exhaustive minimum binary-connective count per truth table (as an int, bit i = output on point i).

    Builds formulas by size: size-0 formulas are literals and constants;
    size-k tables combine two tables of sizes i and k-1-i with AND/OR.
    Feasible for n <= 3 (256 tables).
    """
    if not 1 <= n <= 3:
        raise ValueError("exhaustive formula search supported for n <= 3")
    X = bin_points(n)
    full = (1 << 2**n) - 1
    weights = [1 << i for i in range(2**n)]

    def tab(bits):
        return sum(w for w, b in zip(weights, bits) if b)

    best: dict[int, int] = {0: 0, full: 0}
    for j in range(n):
        v = tab(X[:, j] > 0)
        best.setdefault(v, 0)
        best.setdefault(full ^ v, 0)
    by_size = {0: list(best)}
    k = 0
    while len(best) < 2 ** (2**n):
        k += 1
        new = set()
        for i in range(k):
            A, B = by_size[i], by_size[k - 1 - i]
            for a in A:
                for b in B:
                    for v in (a & b, a | b):
                        if v not in best:
                            new.add(v)
        for v in new:
            best[v] = k
        by_size[k] = sorted(new)
    return best


# ---- bounds ------------------------------------------------------------------

def kbool_bound_linear(n: int, t: int, variant: str = "tight") -> int:
    """n*min(t, 2^n - t) - 1 (clamped at 0); variant='loose' gives 2*n*min(t, 2^n - t)."""
    if not 0 <= t <= 2**n:
        raise ValueError("t outside [0, 2^n]")
    k = min(t, 2**n - t)
    if variant == "loose":
        return 2 * n * k
    if variant != "tight":
        raise ValueError(f"unknown variant {variant!r}")
    return max(n * k - 1, 0)


@lru_cache(maxsize=None)
def kbool_bound_recursive(n: int, t: int) -> int:
    if not 0 <= t <= 2**n:
        raise ValueError("t outside [0, 2^n]")
    if t == 0 or t == 2**n:
        return 0
    if t == 1 or t == 2**n - 1:
        return n - 1
    return kbool_bound_recursive(n - 1, -(-t // 2)) + kbool_bound_recursive(n - 1, t // 2) + 2


def kbool_tail_bound(n: int, k: float) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    return float(min(1.0, max(0.0, 1.0 - k / (2**n * n))))
