"""Closed-form laws and infinite-width predictions (kernel recursions, GP T-distributions)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import erf, roots_hermite

from .estimator import THistogram
from .hypercube import InputSet

ARCCOS_TOL = 1e-12
JITTER_START = 1e-10
JITTER_MAX = 1e-6
MAX_GP_POINTS = 4096


class FactorizationError(np.linalg.LinAlgError):
    pass


class QuadratureError(ArithmeticError):
    pass


# ---- laws --------------------------------------------------------------------

def uniform_law(n: int) -> np.ndarray:
    """P(T=t) for t = 0..2^n of a bias-free perceptron with reflection-symmetric weights."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = np.full(2**n + 1, 2.0**-n)
    p[-1] = 0.0
    return p


def infinitesimal_bias_law(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    p = np.full(2**n + 1, 2.0**-n)
    p[0] = p[-1] = 2.0 ** -(n + 1)
    return p


def avg_prob_in_class(n: int, class_size: int) -> float:
    if class_size < 1:
        raise ValueError("class size must be >= 1")
    return 2.0**-n / class_size


def alternating_prob_uniform_weights(n: int) -> float:
    """P(f = 0101...) for a bias-free perceptron with i.i.d. centered uniform weights: 2^-n / n!."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0**-n / math.factorial(n)


# ---- kernels -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KernelMatrix:
    K: np.ndarray
    depth: int = 0
    sigma_w: float = 1.0
    sigma_b: float = 0.0

    def __post_init__(self):
        K = np.array(self.K, dtype=np.float64, copy=True)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("kernel must be square")
        scale = max(1.0, float(np.abs(K).max(initial=0.0)))
        if not np.allclose(K, K.T, rtol=0, atol=1e-12 * scale):
            raise ValueError("kernel must be symmetric")
        K = 0.5 * (K + K.T)
        d = np.diag(K)
        if (d < 0).any():
            raise ValueError("kernel has a negative diagonal entry")
        zero = d == 0
        if zero.any() and np.abs(K[zero]).max() > 0:
            raise ValueError("zero-variance point with non-zero covariance")
        K.flags.writeable = False
        object.__setattr__(self, "K", K)

    @property
    def m(self) -> int:
        return self.K.shape[0]

    def correlations(self) -> np.ndarray:
        d = np.sqrt(np.diag(self.K))
        denom = np.outer(d, d)
        with np.errstate(invalid="ignore", divide="ignore"):
            rho = np.where(denom > 0, self.K / np.where(denom > 0, denom, 1.0), 1.0)
        return rho

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.K).min())

    def is_psd(self) -> bool:
        return self.min_eigenvalue() >= -1e-8 * max(float(np.trace(self.K)), 1e-300)


def input_kernel(inputs: InputSet, sigma_w: float, sigma_b: float) -> KernelMatrix:
    X = inputs.points
    K = sigma_b**2 + sigma_w**2 * (X @ X.T) / inputs.n
    return KernelMatrix(K, 0, sigma_w, sigma_b)


QUADRATURE_CLAMP_TOL = 1e-6


def _clamped_correlation(K: np.ndarray, tol: float = ARCCOS_TOL) -> tuple[np.ndarray, np.ndarray]:
    d = np.diag(K)
    s = np.sqrt(np.outer(d, d))
    safe = s > 0
    rho = np.ones_like(K)
    rho[safe] = K[safe] / s[safe]
    over = np.abs(rho) - 1.0
    if (over > tol).any():
        raise ArithmeticError(f"correlation exceeds 1 by {over.max():.3g}: kernel is not valid")
    return np.clip(rho, -1.0, 1.0), s


def relu_kernel_step(K: KernelMatrix, sigma_w: float, sigma_b: float) -> KernelMatrix:
    """Arc-cosine recursion for a ReLU layer of infinite width."""
    rho, s = _clamped_correlation(K.K)
    theta = np.arccos(rho)
    J = np.sin(theta) + (np.pi - theta) * np.cos(theta)
    Kn = sigma_b**2 + sigma_w**2 / (2 * np.pi) * s * J
    np.fill_diagonal(Kn, sigma_b**2 + sigma_w**2 / 2 * np.diag(K.K))
    return KernelMatrix(Kn, K.depth + 1, sigma_w, sigma_b)


def relu_correlation_map(rho, sigma_w: float = 1.0, sigma_b: float = 0.0, q: float = 1.0):
    """Correlation after one ReLU layer for two points sharing variance q."""
    rho = np.clip(np.asarray(rho, dtype=np.float64), -1, 1)
    theta = np.arccos(rho)
    J = np.sin(theta) + (np.pi - theta) * np.cos(theta)
    num = sigma_b**2 + sigma_w**2 / (2 * np.pi) * q * J
    return num / (sigma_b**2 + sigma_w**2 / 2 * q)


def relu_kernel(inputs: InputSet, depth: int, sigma_w: float, sigma_b: float) -> KernelMatrix:
    K = input_kernel(inputs, sigma_w, sigma_b)
    for _ in range(depth):
        K = relu_kernel_step(K, sigma_w, sigma_b)
    return K


# ---- general activations by Gauss-Hermite quadrature -------------------------

PHI = {"tanh": np.tanh, "erf": erf}


@dataclass(frozen=True)
class CorrelationState:
    c12: float
    q11: float
    q22: float

    def __post_init__(self):
        if not -1 - ARCCOS_TOL <= self.c12 <= 1 + ARCCOS_TOL:
            raise ValueError("|c12| must be <= 1")
        if not (self.q11 > 0 and self.q22 > 0):
            raise ValueError("variances must be positive")
        object.__setattr__(self, "c12", float(min(1.0, max(-1.0, self.c12))))


@lru_cache(maxsize=16)
def _hermite(order: int):
    x, w = roots_hermite(order)
    return np.sqrt(2.0) * x, w / np.sqrt(np.pi)


def _pair_sum(q1, q2, c, phi, n_outer, n_inner):
    """Anisotropic Gauss-Hermite product rule for E[phi(u1) phi(u2)].

    u1 = sqrt(q1) z1 and u2 = sqrt(q2) (c z1 + sqrt(1-c^2) z2); z1 gets n_outer
    nodes, z2 gets n_inner nodes.
    """
    zo, wo = _hermite(n_outer)
    zi, wi = _hermite(n_inner)
    a = np.sqrt(q2) * c
    b = np.sqrt(q2) * np.sqrt(max(0.0, 1.0 - c * c))
    total = 0.0
    step = max(1, (1 << 22) // n_inner)
    for k in range(0, n_outer, step):
        z = zo[k:k + step]
        g = phi(a * z[:, None] + b * zi[None, :]) @ wi
        total += float((wo[k:k + step] * phi(np.sqrt(q1) * z) * g).sum())
    return total


def _pair_expectation_one(q1, q2, c, phi, order, max_outer=1 << 15, max_inner=1 << 13, tol=1e-8):
    if q2 > q1:
        q1, q2 = q2, q1
    no = ni = order
    cur = _pair_sum(q1, q2, c, phi, no, ni)
    for _ in range(4):
        moved = False
        while True:
            nxt = _pair_sum(q1, q2, c, phi, 2 * no, ni)
            if abs(nxt - cur) <= tol / 2:
                break
            no *= 2
            cur, moved = nxt, True
            if no >= max_outer:
                raise QuadratureError(f"Gauss-Hermite quadrature did not converge by order {no}")
        while True:
            nxt = _pair_sum(q1, q2, c, phi, no, 2 * ni)
            if abs(nxt - cur) <= tol / 2:
                break
            ni *= 2
            cur, moved = nxt, True
            if ni >= max_inner:
                raise QuadratureError(f"Gauss-Hermite quadrature did not converge by order {ni}")
        if not moved:
            return cur
    raise QuadratureError("Gauss-Hermite quadrature did not settle")


def _pair_expectation(q1, q2, c, phi, order):
    """Vectorized wrapper over (q1, q2, c) arrays; each entry converged to 1e-8 by order doubling."""
    q1, q2, c = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (q1, q2, c)))
    out = np.array([_pair_expectation_one(float(a), float(b), float(r), phi, order)
                    for a, b, r in zip(q1.reshape(-1), q2.reshape(-1), c.reshape(-1))])
    return out.reshape(q1.shape)


def _single_expectation(q, phi, order):
    z, w = _hermite(order)
    q = np.asarray(q, dtype=np.float64)[..., None]
    return (phi(np.sqrt(q) * z) ** 2 * w).sum(axis=-1)


def _converged(fn, order: int, max_order: int = 1 << 15):
    """Evaluate fn(order) doubling the order until two successive values agree to 1e-8."""
    prev = fn(order)
    while order < max_order:
        order *= 2
        cur = fn(order)
        if np.max(np.abs(cur - prev)) <= 1e-8:
            return cur
        prev = cur
    raise QuadratureError(f"Gauss-Hermite quadrature did not converge by order {max_order}")


def variance_step(q, sigma_w: float, sigma_b: float, phi: Callable = np.tanh, order: int = 32):
    return sigma_b**2 + sigma_w**2 * _converged(lambda k: _single_expectation(q, phi, k), order)


def tanh_correlation_step(s: CorrelationState, sigma_w: float, sigma_b: float, order: int = 32,
                          phi: Callable = np.tanh) -> CorrelationState:
    if order < 16:
        raise ValueError("quadrature order must be >= 16")
    q11 = float(variance_step(s.q11, sigma_w, sigma_b, phi, order))
    q22 = float(variance_step(s.q22, sigma_w, sigma_b, phi, order))
    e12 = _pair_expectation(s.q11, s.q22, s.c12, phi, order)
    q12 = sigma_b**2 + sigma_w**2 * float(e12)
    c = q12 / np.sqrt(q11 * q22)
    if abs(c) - 1.0 > QUADRATURE_CLAMP_TOL:
        raise ArithmeticError(f"correlation exceeds 1 by {abs(c) - 1.0:.3g}")
    return CorrelationState(float(np.clip(c, -1.0, 1.0)), q11, q22)


def variance_fixed_point(sigma_w: float, sigma_b: float, phi: Callable = np.tanh, q0: float = 1.0,
                         tol: float = 1e-12, max_iter: int = 10000) -> float:
    """Stable fixed point of the single-point variance map.

    Without bias and with a saturating odd phi (tanh, erf), q = 0 is the
    attractor exactly when sigma_w^2 phi'(0)^2 <= 1; on that side the
    approach can be algebraically slow, so it is decided directly.
    """
    if sigma_b == 0:
        d0 = (phi(1e-6) - phi(-1e-6)) / 2e-6
        if sigma_w**2 * d0**2 <= 1:
            return 0.0
    q = q0
    for _ in range(max_iter):
        qn = float(variance_step(q, sigma_w, sigma_b, phi))
        if not np.isfinite(qn):
            break
        if abs(qn - q) <= tol * max(1.0, q):
            return qn
        q = qn
    raise ArithmeticError("variance fixed-point iteration did not converge")


def chaos_slope(sigma_w: float, sigma_b: float, phi: Callable = np.tanh, h: float = 1e-4) -> float:
    """One-sided finite-difference slope of the correlation map at c = 1, at the variance fixed point."""
    q = variance_fixed_point(sigma_w, sigma_b, phi)
    if q == 0:
        d0 = (phi(h) - phi(-h)) / (2 * h)
        return float(sigma_w**2 * d0**2)
    s = tanh_correlation_step(CorrelationState(1.0 - h, q, q), sigma_w, sigma_b, phi=phi)
    return (1.0 - s.c12) / h


def classify_regime(sigma_w: float, sigma_b: float, phi: Callable = np.tanh) -> str:
    return "chaotic" if chaos_slope(sigma_w, sigma_b, phi) > 1.0 else "ordered"


def quadrature_kernel(inputs: InputSet, depth: int, sigma_w: float, sigma_b: float,
                      phi: Callable = np.tanh, order: int = 32) -> KernelMatrix:
    """Kernel after `depth` infinite-width layers of activation phi.

    Entries are propagated per distinct (q_i, q_j, c_ij) triple, so structured
    input sets (e.g. the hypercube, where only Hamming distances matter) cost a
    handful of quadratures per layer.
    """
    K = input_kernel(inputs, sigma_w, sigma_b).K.copy()
    for _ in range(depth):
        d = np.diag(K).copy()
        # entries carry quadrature error (1e-8 absolute), so the clamp allows that much slack
        rho, _ = _clamped_correlation(K, QUADRATURE_CLAMP_TOL)
        iu = np.triu_indices(K.shape[0])
        trip = np.round(np.column_stack([d[iu[0]], d[iu[1]], rho[iu]]), 12)
        uniq, inv = np.unique(trip, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        qd = np.unique(np.round(d, 12))
        vd = sigma_b**2 + sigma_w**2 * _converged(lambda k: _single_expectation(qd, phi, k), order)
        e = _pair_expectation(uniq[:, 0], uniq[:, 1], uniq[:, 2], phi, order)
        vals = sigma_b**2 + sigma_w**2 * e
        Kn = np.zeros_like(K)
        Kn[iu] = vals[inv]
        Kn = Kn + np.triu(Kn, 1).T
        diag_new = vd[np.searchsorted(qd, np.round(d, 12))]
        np.fill_diagonal(Kn, diag_new)
        K = Kn
    return KernelMatrix(K, depth, sigma_w, sigma_b)


def kernel(inputs: InputSet, depth: int, sigma_w: float, sigma_b: float,
           activation: str = "relu") -> KernelMatrix:
    if activation == "relu":
        return relu_kernel(inputs, depth, sigma_w, sigma_b)
    if activation in PHI:
        return quadrature_kernel(inputs, depth, sigma_w, sigma_b, PHI[activation])
    if activation == "linear":
        K = input_kernel(inputs, sigma_w, sigma_b)
        for l in range(depth):
            K = KernelMatrix(sigma_b**2 + sigma_w**2 * K.K, l + 1, sigma_w, sigma_b)
        return K
    raise ValueError(f"unknown activation {activation!r}")


# ---- GP sampling -------------------------------------------------------------

def factor_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky factor, adding relative diagonal jitter 1e-10, 2e-10, ... up to 1e-6 if needed."""
    try:
        return np.linalg.cholesky(K), 0.0
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(K)))
    rel = JITTER_START
    while rel <= JITTER_MAX:
        try:
            return np.linalg.cholesky(K + rel * scale * np.eye(K.shape[0])), rel
        except np.linalg.LinAlgError:
            rel *= 2
    raise FactorizationError("kernel factorization failed after maximum jitter 1e-6")


def gp_t_distribution(inputs: InputSet, depth: int, sigma_w: float, sigma_b: float,
                      mc_samples: int, seed: int, activation: str = "relu",
                      shards: int = 1) -> THistogram:
    """Histogram of T for Heaviside-thresholded draws from the depth-L NNGP prior.

    Points whose kernel variance is exactly zero have a deterministic pre-activation
    of 0 and therefore output 0.
    """
    if inputs.m > MAX_GP_POINTS:
        raise ValueError(f"m={inputs.m} exceeds the dense factorization guard {MAX_GP_POINTS}")
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    K = kernel(inputs, depth, sigma_w, sigma_b, activation).K
    live = np.diag(K) > 0
    L, _ = factor_with_jitter(K[np.ix_(live, live)])
    k = int(live.sum())
    counts = np.zeros(inputs.m + 1, dtype=np.int64)
    base, extra = divmod(mc_samples, shards)
    children = np.random.SeedSequence(seed).spawn(shards)
    for s in range(shards):
        rng = np.random.Generator(np.random.Philox(children[s]))
        todo = base + (1 if s < extra else 0)
        chunk = max(1, min(todo, (1 << 21) // max(k, 1)))
        while todo > 0:
            b = min(chunk, todo)
            Z = rng.standard_normal((b, k))
            t = ((Z @ L.T) > 0).sum(axis=1)
            counts += np.bincount(t, minlength=inputs.m + 1)
            todo -= b
    return THistogram(counts)
