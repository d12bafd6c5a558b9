"""Compile truth tables into explicit ReLU networks and verify them bit-exactly.

A clause neuron for a minterm x* has weights +1 on coordinates where x* is 1,
-1 where it is 0, and bias 1 - |x*|. Its pre-activation is 1 on x* and <= 0 on
every other 0/1 input, so after ReLU it is the indicator of x*. Minterms are
mutually exclusive, so summing clause outputs is an exact OR.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .hypercube import InputSet, OutputPattern, bin_points, build_input_set
from .netsample import NetParams, NetSpec, WeightLaw, eval_pattern

CONSTRUCTION_LAW = WeightLaw(kind="gaussian", scale=1.0, bias="none", scaling="none")


def _clauses(pattern: OutputPattern, n: int) -> tuple[np.ndarray, np.ndarray, bool]:
    """Clause weights/biases for the cheaper of the DNF/CNF forms, and whether the output is negated."""
    if pattern.m != 2**n:
        raise ValueError("pattern must be a truth table over hypercube01")
    bits = pattern.bits()
    t = int(bits.sum())
    negate = t > 2**n - t
    X = bin_points(n)
    rows = X[~bits] if negate else X[bits]
    W = 2.0 * rows - 1.0
    b = 1.0 - rows.sum(axis=1)
    return W, b, negate


def _readout(negate: bool, width: int) -> tuple[np.ndarray, np.ndarray]:
    if negate:
        return -np.ones((1, width)), np.array([0.5])
    return np.ones((1, width)), np.array([-0.5])


def build_one_hidden(pattern: OutputPattern, n: int) -> tuple[NetSpec, NetParams]:
    """<n, min(t, 2^n - t), 1> ReLU net reproducing the pattern."""
    W, b, negate = _clauses(pattern, n)
    k = W.shape[0]
    Wo, bo = _readout(negate, k)
    spec = NetSpec((n, k, 1), "relu", CONSTRUCTION_LAW)
    return spec, NetParams((W.reshape(k, n), Wo), (b, bo))


def build_multi_layer(pattern: OutputPattern, n: int, l: int) -> tuple[NetSpec, NetParams]:
    """l hidden layers of width n + ceil(t_eff / l) + 1.

    Each layer holds an identity passthrough of the input, its share of the
    clause neurons, and one accumulator that sums every clause output seen so far.
    """
    if l < 1:
        raise ValueError("need at least one hidden layer")
    W, b, negate = _clauses(pattern, n)
    t_eff = W.shape[0]
    k = -(-t_eff // l)
    width = n + k + 1
    acc = n + k
    Ws, bs = [], []
    for layer in range(l):
        lo, hi = layer * k, min((layer + 1) * k, t_eff)
        fan_in = n if layer == 0 else width
        M = np.zeros((width, fan_in))
        c = np.zeros(width)
        M[:n, :n] = np.eye(n)
        if hi > lo:
            M[n:n + hi - lo, :n] = W[lo:hi]
            c[n:n + hi - lo] = b[lo:hi]
        if layer > 0:
            M[acc, n:n + k] = 1.0
            M[acc, acc] = 1.0
        Ws.append(M)
        bs.append(c)
    sign = -1.0 if negate else 1.0
    Wo = np.zeros((1, width))
    Wo[0, n:] = sign
    Ws.append(Wo)
    bs.append(np.array([0.5 if negate else -0.5]))
    spec = NetSpec((n,) + (width,) * l + (1,), "relu", CONSTRUCTION_LAW)
    return spec, NetParams(tuple(Ws), tuple(bs))


def verify(spec: NetSpec, params: NetParams, pattern: OutputPattern,
           inputs: InputSet | None = None) -> bool:
    params.check(spec)
    inputs = inputs or build_input_set(spec.n)
    if inputs.m != pattern.m:
        raise ValueError("pattern length does not match the input set")
    return eval_pattern(spec, params, inputs) == pattern


# ---- JSON ---------------------------------------------------------------------

def network_to_dict(spec: NetSpec, params: NetParams, pattern: OutputPattern | None = None) -> dict:
    d = {
        "widths": list(spec.widths),
        "activation": spec.activation,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }
    if pattern is not None:
        d["pattern"] = pattern.hex()
        d["m"] = pattern.m
    return d


def network_from_dict(d: dict) -> tuple[NetSpec, NetParams]:
    widths = tuple(d["widths"])
    weights = []
    for l, w in enumerate(d["weights"]):
        a = np.array(w, dtype=np.float64)
        weights.append(a.reshape(widths[l + 1], widths[l]))
    spec = NetSpec(widths, d.get("activation", "relu"), CONSTRUCTION_LAW)
    params = NetParams(tuple(weights), tuple(np.array(b, dtype=np.float64) for b in d["biases"]))
    params.check(spec)
    return spec, params


def network_to_json(spec: NetSpec, params: NetParams, pattern: OutputPattern | None = None) -> str:
    return json.dumps(network_to_dict(spec, params, pattern))


def network_from_json(text: str) -> tuple[NetSpec, NetParams]:
    return network_from_dict(json.loads(text))
