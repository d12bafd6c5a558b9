"""Empirical objects from campaigns: histograms, rank curves, Zipf fits, tests."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy import stats

from .hypercube import (OutputPattern, SubsetMask, entropy_of_t, n_words, popcount_words,
                        restrict_words)


@dataclass(frozen=True, eq=False)
class THistogram:
    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64, copy=True).reshape(-1)
        if c.size < 1 or (c < 0).any():
            raise ValueError("histogram counts must be non-negative with at least one bin")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def m(self) -> int:
        return self.counts.size - 1

    @property
    def samples(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_t(cls, t: np.ndarray, m: int) -> "THistogram":
        return cls(np.bincount(np.asarray(t, dtype=np.int64), minlength=m + 1))

    def probabilities(self) -> np.ndarray:
        if self.samples == 0:
            raise ValueError("empty histogram")
        return self.counts / self.samples

    def standard_errors(self) -> np.ndarray:
        p = self.probabilities()
        return np.sqrt(p * (1 - p) / self.samples)

    def __eq__(self, other):
        return isinstance(other, THistogram) and np.array_equal(self.counts, other.counts)

    __hash__ = None


class FreqTable:
    """Pattern -> count map held as a sorted (k, W) uint64 key array plus counts."""

    def __init__(self, keys: np.ndarray, counts: np.ndarray, m: int):
        keys = np.ascontiguousarray(np.asarray(keys, dtype=np.uint64).reshape(-1, n_words(m)))
        counts = np.asarray(counts, dtype=np.int64).reshape(-1)
        if keys.shape[0] != counts.size:
            raise ValueError("keys and counts differ in length")
        if (counts <= 0).any():
            raise ValueError("counts must be positive")
        keys.flags.writeable = False
        counts.flags.writeable = False
        self.keys, self.counts, self.m = keys, counts, int(m)
        self._index = None

    @classmethod
    def from_words(cls, words: np.ndarray, m: int, weights: np.ndarray | None = None,
                   canonical: bool = True) -> "FreqTable":
        """Count rows of a (N, W) word array.

        canonical=True sorts the result by pattern value; otherwise rows come out
        in (deterministic) hash order, which is much cheaper for W > 1.
        """
        words = np.ascontiguousarray(np.asarray(words, dtype=np.uint64).reshape(-1, n_words(m)))
        if words.shape[0] == 0:
            return cls(words, np.zeros(0, np.int64), m)
        W = words.shape[1]
        if W == 1:
            order = np.argsort(words[:, 0])
            s = np.take(words, order, axis=0)
            new = _row_changes(s)
        else:
            h = _mix(words)
            order = np.argsort(h)
            s = np.take(words, order, axis=0)
            new = _row_changes(s)
            hs = h[order]
            if (new[1:] & (hs[1:] == hs[:-1])).any():
                order = np.lexsort(words.T)  # hash collision: exact fallback
                s = np.take(words, order, axis=0)
                new = _row_changes(s)
        starts = np.flatnonzero(new)
        if weights is None:
            counts = np.diff(np.append(starts, s.shape[0]))
        else:
            w = np.asarray(weights, dtype=np.int64)[order]
            counts = np.add.reduceat(w, starts)
        keys = s[starts]
        counts = counts.astype(np.int64)
        if canonical and W > 1:
            o = np.lexsort(keys.T)
            keys, counts = keys[o], counts[o]
        return cls(keys, counts, m)

    @classmethod
    def from_mapping(cls, mapping: Mapping[OutputPattern, int]) -> "FreqTable":
        items = [(p, int(c)) for p, c in mapping.items() if c]
        if not items:
            raise ValueError("empty mapping; use from_words with an m")
        m = items[0][0].m
        words = np.stack([p.words for p, _ in items])
        return cls.from_words(words, m, weights=np.array([c for _, c in items]))

    def __len__(self) -> int:
        return int(self.counts.size)

    @property
    def samples(self) -> int:
        return int(self.counts.sum())

    def _lookup(self) -> dict:
        if self._index is None:
            self._index = {self.keys[i].tobytes(): i for i in range(len(self))}
        return self._index

    def __getitem__(self, p: OutputPattern) -> int:
        if p.m != self.m:
            raise ValueError("pattern length does not match table")
        i = self._lookup().get(p.words.astype("<u8").tobytes())
        return 0 if i is None else int(self.counts[i])

    def __contains__(self, p: OutputPattern) -> bool:
        return self[p] > 0

    def patterns(self) -> list[OutputPattern]:
        return [OutputPattern(self.keys[i], self.m) for i in range(len(self))]

    def items(self) -> Iterator[tuple[OutputPattern, int]]:
        for i in range(len(self)):
            yield OutputPattern(self.keys[i], self.m), int(self.counts[i])

    def as_set(self) -> set[OutputPattern]:
        return set(self.patterns())

    def t_values(self) -> np.ndarray:
        return popcount_words(self.keys)

    def thist(self) -> THistogram:
        h = np.bincount(self.t_values(), weights=self.counts, minlength=self.m + 1)
        return THistogram(np.rint(h).astype(np.int64))

    def filter_t(self, t: int) -> "FreqTable":
        sel = self.t_values() == t
        return FreqTable(self.keys[sel], self.counts[sel], self.m)

    def restrict(self, mask: SubsetMask) -> "FreqTable":
        sub = restrict_words(self.keys, self.m, mask)
        return FreqTable.from_words(sub, 2**mask.size, weights=self.counts)

    def __eq__(self, other):
        return (isinstance(other, FreqTable) and self.m == other.m
                and np.array_equal(self.keys, other.keys) and np.array_equal(self.counts, other.counts))

    __hash__ = None


def _row_changes(s: np.ndarray) -> np.ndarray:
    new = np.ones(s.shape[0], dtype=bool)
    if s.shape[0] > 1:
        diff = s[1:, 0] != s[:-1, 0]
        for j in range(1, s.shape[1]):
            diff |= s[1:, j] != s[:-1, j]
        new[1:] = diff
    return new


_MIX = np.uint64(0x9E3779B97F4A7C15)


def _mix(words: np.ndarray) -> np.ndarray:
    h = np.zeros(words.shape[0], dtype=np.uint64)
    for j in range(words.shape[1]):
        h = (h ^ words[:, j]) * _MIX
        h ^= h >> np.uint64(29)
    return h


def merge_freq_tables(tables: Iterable[FreqTable], m: int | None = None,
                      canonical: bool = True) -> FreqTable:
    tables = list(tables)
    if not tables:
        if m is None:
            raise ValueError("nothing to merge")
        return FreqTable(np.zeros((0, n_words(m)), np.uint64), np.zeros(0, np.int64), m)
    m = tables[0].m if m is None else m
    if any(t.m != m for t in tables):
        raise ValueError("cannot merge tables with different m")
    keys = np.concatenate([t.keys for t in tables]) if tables else np.zeros((0, n_words(m)), np.uint64)
    counts = np.concatenate([t.counts for t in tables])
    return FreqTable.from_words(keys, m, weights=counts, canonical=canonical)


# ---- tests -------------------------------------------------------------------

def chi_square_uniformity(h: THistogram, support: int | None = None) -> tuple[float, float]:
    """Pearson statistic against the uniform law on t = 0..support-1.

    support defaults to m (i.e. t in [0, 2^n - 1] for a hypercube histogram).
    Mass outside the support makes the statistic infinite.
    """
    N = h.samples
    if N == 0:
        raise ValueError("empty histogram")
    K = h.m if support is None else int(support)
    if not 1 <= K <= h.counts.size:
        raise ValueError("support outside histogram range")
    if h.counts[K:].sum() > 0:
        return float("inf"), 0.0
    obs = h.counts[:K].astype(np.float64)
    if K == 1:
        return 0.0, 1.0
    exp = N / K
    stat = float(((obs - exp) ** 2).sum() / exp)
    return stat, float(stats.chi2.sf(stat, K - 1))


def chi_square_homogeneity(a: THistogram, b: THistogram) -> tuple[float, float, int]:
    """Two-sample Pearson test that two histograms share one law (bins empty in both dropped)."""
    if a.counts.size != b.counts.size:
        raise ValueError("histograms have different lengths")
    if a.samples == 0 or b.samples == 0:
        raise ValueError("empty histogram")
    tab = np.vstack([a.counts, b.counts]).astype(np.float64)
    tab = tab[:, tab.sum(axis=0) > 0]
    if tab.shape[1] < 2:
        return 0.0, 1.0, 0
    stat, p, dof, _ = stats.chi2_contingency(tab, correction=False)
    return float(stat), float(p), int(dof)


# ---- rank curves and Zipf -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class RankCurve:
    ranks: np.ndarray
    probabilities: np.ndarray
    keys: np.ndarray
    counts: np.ndarray
    cutoff: int
    samples: int
    m: int
    dropped: int

    def __len__(self):
        return int(self.ranks.size)

    def patterns(self) -> list[OutputPattern]:
        return [OutputPattern(k, self.m) for k in self.keys]


def rank_curve(f: FreqTable, cutoff: int = 2) -> RankCurve:
    """Patterns with count > cutoff, by descending probability; ties by pattern value ascending."""
    N = f.samples
    keep = f.counts > cutoff
    keys, counts = f.keys[keep], f.counts[keep]
    order_keys = [keys[:, j] for j in range(keys.shape[1])] + [-counts]
    order = np.lexsort(order_keys) if counts.size else np.zeros(0, np.int64)
    keys, counts = keys[order], counts[order]
    probs = counts / N if N else counts.astype(np.float64)
    return RankCurve(np.arange(1, counts.size + 1), probs, keys, counts, int(cutoff), N, f.m,
                     int((~keep).sum()))


@dataclass(frozen=True)
class ZipfFit:
    slope: float
    intercept: float
    n_o: float
    residual: float
    points: int

    @property
    def a(self) -> float:
        return -self.slope

    @property
    def b(self) -> float:
        return 10.0**self.intercept

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "N_O": self.n_o,
                "residual": self.residual, "points": self.points}


def n_o_from_zipf(slope: float, intercept: float) -> float:
    """Extrapolated function count from p(r) = b r^-a normalized on [1, N_O].

    a = 1 gives N_O = exp(1/b); otherwise the integral of b r^-a from 1 to N_O
    equals one. Returns inf when the normalization cannot be reached (a > 1 and
    the tail mass b/(a-1) is below one).
    """
    a = -slope
    b = 10.0**intercept
    if abs(a - 1.0) < 1e-12:
        return float(np.exp(1.0 / b))
    base = 1.0 + (1.0 - a) / b
    if base <= 0:
        return float("inf")
    with np.errstate(over="ignore"):
        return float(np.exp(np.log(base) / (1.0 - a)))


def zipf_fit(r: RankCurve | tuple[np.ndarray, np.ndarray]) -> ZipfFit:
    if isinstance(r, RankCurve):
        ranks, probs = r.ranks, r.probabilities
    else:
        ranks, probs = (np.asarray(v, dtype=np.float64) for v in r)
    if len(ranks) < 10:
        raise ValueError("Zipf fit needs at least 10 retained ranks")
    x = np.log10(np.asarray(ranks, dtype=np.float64))
    y = np.log10(np.asarray(probs, dtype=np.float64))
    if np.ptp(x) == 0:
        raise ValueError("degenerate fit: all ranks equal")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return ZipfFit(slope, intercept, n_o_from_zipf(slope, intercept), resid, int(x.size))


# ---- moments, entropy, marginals ------------------------------------------------

def t_moments(h: THistogram, q: int) -> float:
    if q < 1:
        raise ValueError("moment order must be >= 1")
    t = np.arange(h.counts.size, dtype=np.float64)
    return float((t**q * h.counts).sum() / h.samples)


def mean_entropy(h: THistogram) -> float:
    if h.samples == 0:
        raise ValueError("empty histogram")
    H = entropy_of_t(np.arange(h.counts.size), h.m)
    return float((H * h.counts).sum() / h.samples)


def entropy_standard_error(h: THistogram) -> float:
    H = entropy_of_t(np.arange(h.counts.size), h.m)
    p = h.probabilities()
    mu = float((H * p).sum())
    var = float((p * (H - mu) ** 2).sum())
    return float(np.sqrt(var / h.samples))


def subset_marginal(f: FreqTable, mask: SubsetMask, t: int) -> float:
    if f.m != 2**mask.n:
        raise ValueError("mask dimension does not match the table's hypercube")
    sub = restrict_words(f.keys, f.m, mask)
    sel = popcount_words(sub) == t
    return float(f.counts[sel].sum() / f.samples)


def pattern_probability(f: FreqTable, p: OutputPattern) -> tuple[float, float]:
    """Estimate and binomial standard error."""
    N = f.samples
    q = f[p] / N
    return q, float(np.sqrt(q * (1 - q) / N))
