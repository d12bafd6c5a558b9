"""Random parameter draws, forward evaluation and sharded sampling campaigns."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np
from scipy.special import erf

from .hypercube import InputSet, OutputPattern, pack_bits, popcount_words
from .estimator import FreqTable, THistogram, merge_freq_tables

RNG_NAME = "numpy.Philox (SeedSequence.spawn per shard)"

ACTIVATIONS = {
    "relu": lambda x: np.maximum(x, 0.0),
    "tanh": np.tanh,
    "erf": erf,
    "linear": lambda x: x,
}
SCALINGS = ("none", "fan_in", "sqrt_fan_in")


@dataclass(frozen=True)
class WeightLaw:
    kind: str = "gaussian"      # gaussian | uniform
    scale: float = 1.0          # sigma_w, or half-width for uniform
    bias: str = "none"          # gaussian | uniform | none
    bias_scale: float = 0.0     # sigma_b, or epsilon for uniform
    scaling: str = "fan_in"     # none | fan_in | sqrt_fan_in

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform"):
            raise ValueError(f"unknown weight law {self.kind!r}")
        if self.bias not in ("gaussian", "uniform", "none"):
            raise ValueError(f"unknown bias law {self.bias!r}")
        if self.scaling not in SCALINGS:
            raise ValueError(f"unknown fan-in scaling {self.scaling!r}")
        if not self.scale > 0:
            raise ValueError("weight scale must be > 0")
        if not self.bias_scale >= 0:
            raise ValueError("bias scale must be >= 0")

    @property
    def has_bias(self) -> bool:
        return self.bias != "none" and self.bias_scale > 0

    def weight_scale(self, fan_in: int) -> float:
        if self.scaling == "fan_in":
            return self.scale / np.sqrt(fan_in)
        if self.scaling == "sqrt_fan_in":
            return self.scale / fan_in**0.25
        return self.scale


@dataclass(frozen=True)
class NetSpec:
    widths: tuple[int, ...]
    activation: str = "relu"
    law: WeightLaw = field(default_factory=WeightLaw)

    def __post_init__(self):
        w = tuple(int(x) for x in self.widths)
        object.__setattr__(self, "widths", w)
        if len(w) < 2 or w[-1] != 1:
            raise ValueError("widths must be <n0, ..., 1>")
        if w[0] < 1 or any(x < 0 for x in w):
            raise ValueError("input width must be >= 1 and widths non-negative")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def depth(self) -> int:
        return len(self.widths) - 2

    @property
    def n(self) -> int:
        return self.widths[0]

    @classmethod
    def perceptron(cls, n: int, law: WeightLaw | None = None) -> "NetSpec":
        return cls((n, 1), "linear", law or WeightLaw(scaling="none"))

    @classmethod
    def mlp(cls, n: int, hidden: Sequence[int], activation="relu", law: WeightLaw | None = None) -> "NetSpec":
        return cls((n, *hidden, 1), activation, law or WeightLaw())

    def to_dict(self) -> dict:
        return {"widths": list(self.widths), "activation": self.activation, "law": asdict(self.law)}

    @classmethod
    def from_dict(cls, d: dict) -> "NetSpec":
        return cls(tuple(d["widths"]), d.get("activation", "relu"), WeightLaw(**d.get("law", {})))


@dataclass(frozen=True, eq=False)
class NetParams:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=np.float64) for w in self.weights)
        bs = tuple(np.array(b, dtype=np.float64).reshape(-1) for b in self.biases)
        for a in ws + bs:
            a.flags.writeable = False
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    def check(self, spec: NetSpec) -> None:
        if len(self.weights) != len(spec.widths) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("layer count does not match spec")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (spec.widths[l + 1], spec.widths[l])
            if w.shape != shape or b.shape != (shape[0],):
                raise ValueError(f"layer {l}: expected W{shape}, b({shape[0]},), got {w.shape}, {b.shape}")


def make_rng(seed, shard: int = 0, shards: int = 1) -> np.random.Generator:
    ss = np.random.SeedSequence(seed).spawn(shards)[shard]
    return np.random.Generator(np.random.Philox(ss))


def _draw_batch(spec: NetSpec, rng: np.random.Generator, B: int):
    law = spec.law
    Ws, bs = [], []
    for l in range(len(spec.widths) - 1):
        fan_in, fan_out = spec.widths[l], spec.widths[l + 1]
        s = law.weight_scale(max(fan_in, 1))
        if law.kind == "gaussian":
            W = rng.standard_normal((B, fan_out, fan_in)) * s
        else:
            W = rng.uniform(-s, s, size=(B, fan_out, fan_in))
        if not law.has_bias:
            b = np.zeros((B, fan_out))
        elif law.bias == "gaussian":
            b = rng.standard_normal((B, fan_out)) * law.bias_scale
        else:
            b = rng.uniform(-law.bias_scale, law.bias_scale, size=(B, fan_out))
        Ws.append(W)
        bs.append(b)
    return Ws, bs


def draw_params(spec: NetSpec, rng: np.random.Generator) -> NetParams:
    Ws, bs = _draw_batch(spec, rng, 1)
    return NetParams(tuple(w[0] for w in Ws), tuple(b[0] for b in bs))


def _forward_batch(spec: NetSpec, Ws, bs, X: np.ndarray) -> np.ndarray:
    """Final pre-activations, shape (B, m)."""
    act = ACTIVATIONS[spec.activation]
    L = len(Ws)
    if L == 1:
        pre = Ws[0][:, 0, :] @ X.T
        if bs[0].any():
            pre += bs[0][:, :1]
        return pre
    # layout (B, width, m); the first layer is one GEMM over all draws
    B, w1, n = Ws[0].shape
    H = (Ws[0].reshape(B * w1, n) @ X.T).reshape(B, w1, X.shape[0])
    H += bs[0][:, :, None]
    for l in range(1, L - 1):
        H = np.matmul(Ws[l], act(H))
        H += bs[l][:, :, None]
    return np.einsum("bj,bjm->bm", Ws[-1][:, 0, :], act(H)) + bs[-1][:, :1]


def eval_pattern(spec: NetSpec, params: NetParams, inputs: InputSet) -> OutputPattern:
    params.check(spec)
    if inputs.n != spec.n:
        raise ValueError(f"input dimension {inputs.n} does not match n0={spec.n}")
    pre = preactivations(spec, params, inputs)
    return OutputPattern.from_bits(pre > 0)


def preactivations(spec: NetSpec, params: NetParams, inputs: InputSet) -> np.ndarray:
    """Final pre-activation per input point (length m)."""
    params.check(spec)
    Ws = [w[None] for w in params.weights]
    bs = [b[None] for b in params.biases]
    return _forward_batch(spec, Ws, bs, inputs.points)[0]


def hidden_activations(spec: NetSpec, params: NetParams, inputs: InputSet) -> list[np.ndarray]:
    """Post-activation arrays (m, n_l) for every hidden layer."""
    params.check(spec)
    act = ACTIVATIONS[spec.activation]
    out = []
    A = inputs.points
    for W, b in zip(params.weights[:-1], params.biases[:-1]):
        A = act(A @ W.T + b)
        out.append(A)
    return out


# ---- campaigns ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CampaignResult:
    freq: FreqTable
    thist: THistogram
    samples: int
    seed: int
    shards: int
    spec: NetSpec
    inputs: dict

    def metadata(self) -> dict:
        from . import __version__
        return {
            "seed": self.seed,
            "shards": self.shards,
            "samples": self.samples,
            "spec": self.spec.to_dict(),
            "inputs": self.inputs,
            "rng": RNG_NAME,
            "version": __version__,
        }

    def to_json_dict(self) -> dict:
        d = self.metadata()
        d["distinct_patterns"] = len(self.freq)
        d["thist"] = [int(c) for c in self.thist.counts]
        return d


def chunk_size(spec: NetSpec, m: int) -> int:
    """Draws per batch, sized so the widest activation block stays near 1 MB (cache-resident)."""
    widest = max(spec.widths[1:-1], default=1)
    per_draw = m * max(widest, 1) + sum(a * b for a, b in zip(spec.widths[:-1], spec.widths[1:]))
    return int(max(64, min(8192, (1 << 17) // max(per_draw, 1))))


def _run_shard(args):
    spec, points, seed, shard, shards, count = args
    rng = make_rng(seed, shard, shards)
    m = points.shape[0]
    B = chunk_size(spec, m)
    table = None
    buffer, buffered = [], 0
    done = 0
    while done < count:
        b = min(B, count - done)
        Ws, bs = _draw_batch(spec, rng, b)
        buffer.append(pack_bits(_forward_batch(spec, Ws, bs, points) > 0))
        buffered += b
        done += b
        # fold raw rows into the table only when the buffer rivals the table in size
        if buffered >= max(1 << 20, len(table) if table is not None else 0) or done == count:
            part = FreqTable.from_words(np.concatenate(buffer), m, canonical=False)
            table = part if table is None else merge_freq_tables([table, part], m=m, canonical=False)
            buffer, buffered = [], 0
    return table


def worker_cap() -> int:
    env = os.environ.get("PRIORLENS_THREADS")
    if env:
        try:
            v = int(env)
        except ValueError:
            raise ValueError(f"PRIORLENS_THREADS must be an integer, got {env!r}") from None
        return max(1, v)
    return os.cpu_count() or 1


def shard_sizes(samples: int, shards: int) -> list[int]:
    base, extra = divmod(samples, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def run_campaign(spec: NetSpec, inputs: InputSet, samples: int, seed: int, shards: int = 1,
                 workers: int | None = None) -> CampaignResult:
    """Sample `samples` parameter draws and tabulate the resulting patterns.

    Shard k uses the k-th child of SeedSequence(seed); results depend only on
    (seed, shards), never on the number of worker processes.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if shards < 1:
        raise ValueError("shards must be >= 1")
    if inputs.n != spec.n:
        raise ValueError(f"input dimension {inputs.n} does not match n0={spec.n}")
    jobs = [(spec, inputs.points, seed, k, shards, c) for k, c in enumerate(shard_sizes(samples, shards)) if c]
    nworkers = min(workers or worker_cap(), worker_cap(), len(jobs))
    if nworkers > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as ex:
            parts = list(ex.map(_run_shard, jobs))
    else:
        parts = [_run_shard(j) for j in jobs]
    freq = merge_freq_tables(parts, m=inputs.m, canonical=True)
    return CampaignResult(freq, freq.thist(), samples, int(seed), shards, spec, inputs.describe())
