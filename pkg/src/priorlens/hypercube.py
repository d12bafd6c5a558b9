"""Input sets, canonical ordering, bit-packed output patterns, T and entropy."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

WORD_BITS = 64
MAX_HYPERCUBE_DIM = 20

KINDS = ("hypercube01", "hypercube±1")
_KIND_ALIASES = {
    "hypercube01": "hypercube01",
    "hypercube±1": "hypercube±1",
    "hypercube_pm1": "hypercube±1",
    "hypercubepm1": "hypercube±1",
}


class InputSetError(ValueError):
    pass


def n_words(m: int) -> int:
    return max(1, -(-m // WORD_BITS))


def bin_points(n: int) -> np.ndarray:
    """Rows bin(i) for i < 2**n, most-significant bit first."""
    idx = np.arange(2**n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.float64)


def point_index(x: Sequence[float]) -> int:
    """Inverse of bin ordering for a 0/1 point."""
    i = 0
    for v in x:
        i = (i << 1) | int(round(float(v)))
    return i


@dataclass(frozen=True, eq=False)
class InputSet:
    points: np.ndarray
    label: str
    source_index: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputSetError("input set needs at least one point of dimension >= 1")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.source_index is not None:
            si = np.array(self.source_index, dtype=np.int64, copy=True)
            si.flags.writeable = False
            object.__setattr__(self, "source_index", si)

    @property
    def n(self) -> int:
        return int(self.points.shape[1])

    @property
    def m(self) -> int:
        return int(self.points.shape[0])

    def describe(self) -> dict:
        d = {"label": self.label, "n": self.n, "m": self.m}
        if self.source_index is not None:
            d["source_index"] = [int(i) for i in self.source_index]
        return d


def build_input_set(n: int, kind: str = "hypercube01", subsample: tuple[int, int] | None = None) -> InputSet:
    """Full hypercube in bin order, optionally a seeded subsample without replacement.

    Subsampled rows keep their relative bin order.
    """
    if kind not in _KIND_ALIASES:
        raise InputSetError(f"unknown input kind {kind!r}")
    kind = _KIND_ALIASES[kind]
    if not 1 <= n <= MAX_HYPERCUBE_DIM:
        raise InputSetError(f"dimension {n} outside 1..{MAX_HYPERCUBE_DIM}")
    pts = bin_points(n)
    if kind == "hypercube±1":
        pts = 2.0 * pts - 1.0
    if subsample is None:
        return InputSet(pts, kind)
    size, seed = subsample
    if not 1 <= size <= 2**n:
        raise InputSetError(f"subsample size {size} exceeds 2**{n} or is < 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    chosen = np.sort(rng.choice(2**n, size=size, replace=False))
    return InputSet(pts[chosen], "subsample", source_index=chosen)


def load_input_set(path) -> InputSet:
    rows = []
    width = None
    with open(path, newline="") as fh:
        for r, raw in enumerate(csv.reader(fh), start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            try:
                vals = [float(c) for c in raw]
            except ValueError:
                raise InputSetError(f"row {r}: non-numeric cell") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise InputSetError(f"row {r}: ragged row ({len(vals)} cells, expected {width})")
            rows.append(vals)
    if not rows:
        raise InputSetError(f"{path}: empty input file")
    return InputSet(np.asarray(rows), "external")


# ---- packing ---------------------------------------------------------------

def pack_bits(bits: np.ndarray) -> np.ndarray:
    """(..., m) bool -> (..., W) uint64, little-endian words, bit i of the pattern at word i//64 bit i%64."""
    bits = np.asarray(bits, dtype=bool)
    m = bits.shape[-1]
    W = n_words(m)
    pad = W * WORD_BITS - m
    if pad:
        bits = np.concatenate([bits, np.zeros(bits.shape[:-1] + (pad,), dtype=bool)], axis=-1)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, m: int) -> np.ndarray:
    words = np.ascontiguousarray(np.asarray(words, dtype="<u8"))
    as_bytes = words.view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder="little")[..., :m].astype(bool)


def popcount_words(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(words, dtype=np.uint64)).sum(axis=-1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class OutputPattern:
    words: np.ndarray
    m: int

    def __post_init__(self):
        w = np.array(self.words, dtype=np.uint64, copy=True).reshape(-1)
        if w.size != n_words(self.m):
            raise ValueError("word count does not match m")
        # bits beyond m must be clear so equality is word-wise
        tail = self.m % WORD_BITS
        if tail and int(w[-1]) >> tail:
            raise ValueError("bits set beyond pattern length")
        w.flags.writeable = False
        object.__setattr__(self, "words", w)

    @classmethod
    def from_bits(cls, bits: Iterable) -> "OutputPattern":
        b = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=bool).reshape(-1)
        return cls(pack_bits(b), int(b.size))

    @classmethod
    def from_string(cls, s: str) -> "OutputPattern":
        if not s or set(s) - {"0", "1"}:
            raise ValueError("bit string must be a non-empty string of 0/1")
        return cls.from_bits(np.frombuffer(s.encode(), dtype=np.uint8) == ord("1"))

    @classmethod
    def from_int(cls, value: int, m: int) -> "OutputPattern":
        if value < 0 or value >> m:
            raise ValueError("value does not fit in m bits")
        W = n_words(m)
        words = [(value >> (WORD_BITS * k)) & 0xFFFFFFFFFFFFFFFF for k in range(W)]
        return cls(np.array(words, dtype=np.uint64), m)

    @classmethod
    def from_hex(cls, text: str, m: int) -> "OutputPattern":
        return cls.from_int(int(text, 16), m)

    def to_int(self) -> int:
        v = 0
        for k, w in enumerate(self.words.tolist()):
            v |= int(w) << (WORD_BITS * k)
        return v

    def hex(self) -> str:
        return format(self.to_int(), f"0{max(1, -(-self.m // 4))}x")

    def bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.m)

    def complement(self) -> "OutputPattern":
        return OutputPattern.from_bits(~self.bits())

    def reverse(self) -> "OutputPattern":
        return OutputPattern.from_bits(self.bits()[::-1])

    @property
    def t(self) -> int:
        return t_value(self)

    def __eq__(self, other):
        if not isinstance(other, OutputPattern):
            return NotImplemented
        return self.m == other.m and bool(np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.m, self.words.tobytes()))

    def __str__(self):
        return "".join("1" if b else "0" for b in self.bits())

    def __repr__(self):
        s = str(self) if self.m <= 64 else self.hex()
        return f"OutputPattern({s!r}, m={self.m})"


def t_value(p: OutputPattern) -> int:
    return int(popcount_words(p.words))


def binary_entropy(q) -> np.ndarray:
    """H(q) in bits with H(0)=H(1)=0; vectorized."""
    q = np.asarray(q, dtype=np.float64)
    out = np.zeros_like(q)
    inner = (q > 0) & (q < 1)
    qi = q[inner]
    out[inner] = -qi * np.log2(qi) - (1 - qi) * np.log2(1 - qi)
    return out


def entropy_of_t(t, m: int) -> np.ndarray | float:
    h = binary_entropy(np.asarray(t, dtype=np.float64) / m)
    return float(h) if h.ndim == 0 else h


def entropy(p: OutputPattern) -> float:
    return float(entropy_of_t(t_value(p), p.m))


# ---- sub-hypercubes ----------------------------------------------------------

@dataclass(frozen=True)
class SubsetMask:
    coords: tuple[int, ...]
    n: int

    def __post_init__(self):
        c = tuple(sorted(set(int(i) for i in self.coords)))
        if any(i < 0 or i >= self.n for i in c):
            raise ValueError(f"mask references coordinates outside 0..{self.n - 1}")
        object.__setattr__(self, "coords", c)

    @property
    def size(self) -> int:
        return len(self.coords)

    @classmethod
    def full(cls, n: int) -> "SubsetMask":
        return cls(tuple(range(n)), n)

    def indices(self) -> np.ndarray:
        """Hypercube indices of the sub-cube, in bin order over the selected coordinates."""
        k = self.size
        j = np.arange(2**k, dtype=np.int64)
        idx = np.zeros_like(j)
        for pos, c in enumerate(self.coords):
            bit = (j >> (k - 1 - pos)) & 1
            idx |= bit << (self.n - 1 - c)
        return idx


def restrict(p: OutputPattern, mask: SubsetMask) -> OutputPattern:
    if p.m != 2**mask.n:
        raise ValueError("restrict needs a pattern on the full hypercube01 of the mask's dimension")
    return OutputPattern.from_bits(p.bits()[mask.indices()])


def restrict_words(words: np.ndarray, m: int, mask: SubsetMask) -> np.ndarray:
    """Vectorized restrict over an (N, W) word array."""
    if m != 2**mask.n:
        raise ValueError("restrict needs patterns on the full hypercube01 of the mask's dimension")
    bits = unpack_bits(words, m)[:, mask.indices()]
    return pack_bits(bits)
