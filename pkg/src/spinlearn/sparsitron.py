"""Online multiplicative-weights learner for sigmoid-link sparse GLMs.

Model: Pr[Y = 1 | X = x] = sigmoid(w . x + g(x)) with ||w||_1 <= lam,
features x in [-1, 1]^m, labels +/-1, and g a known per-example offset
(identically zero in the plain variant).

The learner runs Hedge over 2m sign-doubled experts (+x_j and -x_j),
which realizes the l1 ball of radius lam as a probability simplex.  At
step t it predicts with u = sigmoid(lam * p^t . x^t + g^t), suffers the
loss vector l^t = (1 + (u - y^t) * x^t) / 2 (entries provably in [0,1],
asserted at runtime), and multiplies weights by beta_h^l with
beta_h = 1 / (1 + sqrt(2 ln(2m) / T)).  Candidate hypotheses are the
scaled iterates lam * p^t; the returned one minimizes empirical squared
risk on a holdout suffix of the batch, earliest iteration winning ties.

For tractability the holdout scan evaluates an evenly spaced subsample
of the iterates (``max_candidates``, always containing t=1 and t=T)
rather than all T of them; set max_candidates >= T to scan every
iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import expit

from .errors import BudgetError, ConfigError, DimensionError, InvariantError
from .poly import Polynomial


def sigmoid(z):
    """Numerically stable logistic function, elementwise."""
    return expit(z)


def anti_lipschitz_gap(a, b):
    """(|sigmoid(a)-sigmoid(b)|, exp(-|a|-3) * min(1, |a-b|)) elementwise.

    The first component dominates the second for all real a, b, which
    is what lets squared prediction risk control parameter error.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lhs = np.abs(expit(a) - expit(b))
    rhs = np.exp(-np.abs(a) - 3.0) * np.minimum(1.0, np.abs(a - b))
    return lhs, rhs


@dataclass(frozen=True)
class OffsetFunction:
    """Known additive offset g, evaluated on raw +/-1 configurations."""

    poly: Polynomial

    def values(self, configs) -> np.ndarray:
        return self.poly.evaluate_batch(configs)


@dataclass
class SparsitronConfig:
    lam: float
    epsilon: float = 0.01
    delta: float = 0.1
    T: int = 0  # 0 = auto-size from (lam, epsilon, delta)
    M: int = 0  # 0 = auto-size from T
    c_T: float = 10.0
    c_M: float = 10.0
    max_candidates: int = 256
    keep_trace: bool = False

    def validate(self) -> None:
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ConfigError("lam must be positive and finite")
        if not (0 < self.epsilon <= 1):
            raise ConfigError("epsilon must lie in (0, 1]")
        if not (0 < self.delta < 1):
            raise ConfigError("delta must lie in (0, 1)")
        if self.T < 0 or self.M < 0:
            raise ConfigError("T and M must be nonnegative")
        if self.max_candidates < 1:
            raise ConfigError("max_candidates must be >= 1")

    def sized_T(self, m: int) -> int:
        """ceil(c_T * lam^2 * ln(2m / (delta * eps)) / eps^2)."""
        if self.T > 0:
            return self.T
        val = self.c_T * self.lam**2 * math.log(2 * m / (self.delta * self.epsilon))
        return int(math.ceil(val / self.epsilon**2))

    def sized_M(self, T: int) -> int:
        """ceil(c_M * ln(T / delta) / eps^2)."""
        if self.M > 0:
            return self.M
        return int(math.ceil(self.c_M * math.log(T / self.delta) / self.epsilon**2))


@dataclass
class SparsitronResult:
    w: np.ndarray  # feature-space hypothesis, ||w||_1 <= lam
    chosen_iteration: int
    holdout_risk: float
    T: int
    M: int
    loss_min: float
    loss_max: float
    candidate_iterations: np.ndarray | None = None
    candidate_risks: np.ndarray | None = None


@numba.njit(cache=True)
def _mwu_pass(feats, y01, offs, lam, ln_beta, cand_iters, cand_p):  # pragma: no cover
    T, m = feats.shape
    w = np.full(2 * m, 1.0 / (2 * m))
    loss_lo = 1.0
    loss_hi = 0.0
    k = 0
    n_cand = cand_iters.shape[0]
    for t in range(1, T + 1):
        if k < n_cand and cand_iters[k] == t:
            for j in range(2 * m):
                cand_p[k, j] = w[j]
            k += 1
        dot = 0.0
        for j in range(m):
            dot += (w[j] - w[m + j]) * feats[t - 1, j]
        z = lam * dot + offs[t - 1]
        if z >= 0.0:
            u = 1.0 / (1.0 + np.exp(-z))
        else:
            e = np.exp(z)
            u = e / (1.0 + e)
        c = u - y01[t - 1]
        s = 0.0
        for j in range(m):
            lp = 0.5 * (1.0 + c * feats[t - 1, j])
            lq = 1.0 - lp
            if lp < loss_lo:
                loss_lo = lp
            if lp > loss_hi:
                loss_hi = lp
            if lq < loss_lo:
                loss_lo = lq
            if lq > loss_hi:
                loss_hi = lq
            w[j] *= np.exp(lp * ln_beta)
            w[m + j] *= np.exp(lq * ln_beta)
            s += w[j] + w[m + j]
        inv = 1.0 / s
        for j in range(2 * m):
            w[j] *= inv
    return loss_lo, loss_hi


def _holdout_risks(cand_w: np.ndarray, X: np.ndarray, y01: np.ndarray,
                   offs: np.ndarray | None, chunk: int = 1 << 16) -> np.ndarray:
    """Empirical squared risk of each candidate on the holdout."""
    M = X.shape[0]
    W = np.ascontiguousarray(cand_w.T, dtype=np.float32)
    sums = np.zeros(cand_w.shape[0], dtype=np.float64)
    for lo in range(0, M, chunk):
        hi = min(lo + chunk, M)
        Z = X[lo:hi] @ W
        if offs is not None:
            Z += offs[lo:hi, None]
        D = expit(Z) - y01[lo:hi, None]
        sums += np.einsum("ij,ij->j", D, D, dtype=np.float64)
    return sums / M


def candidate_grid(T: int, max_candidates: int) -> np.ndarray:
    """Evenly spaced 1-indexed iterations, always containing 1 and T."""
    k = min(max_candidates, T)
    return np.unique(np.round(np.linspace(1, T, num=k)).astype(np.int64))


def sparsitron(features, labels, cfg: SparsitronConfig, offsets=None) -> SparsitronResult:
    """One-pass MWU learning with holdout selection.

    ``features`` is an (N, m) array with entries in [-1, 1]; ``labels``
    a length-N array of +/-1.  The first T rows are the training stream
    and the next M rows the holdout, with T and M from cfg (auto-sized
    when zero).  ``offsets`` are per-example values of the known offset
    g; None means g = 0 and is bit-identical to passing zeros.
    """
    cfg.validate()
    X = np.asarray(features)
    if X.ndim != 2:
        raise DimensionError("features must be a 2-D array")
    y = np.asarray(labels)
    if y.shape != (X.shape[0],):
        raise DimensionError("labels must be 1-D and match the feature rows")
    N, m = X.shape
    if m < 1:
        raise DimensionError("need at least one feature")
    if not np.all(np.abs(y.astype(np.float64)) == 1.0):
        raise ConfigError("labels must be +/-1")
    Xf = np.ascontiguousarray(X, dtype=np.float32)
    lo, hi = float(Xf.min()), float(Xf.max())
    if not (lo >= -1.0 - 1e-6 and hi <= 1.0 + 1e-6):
        raise ConfigError(f"features must lie in [-1, 1]; saw [{lo}, {hi}]")
    if offsets is not None:
        offs = np.ascontiguousarray(offsets, dtype=np.float32)
        if offs.shape != (N,):
            raise DimensionError("offsets must match the number of examples")
    else:
        offs = None

    T = cfg.sized_T(m)
    M = cfg.sized_M(T)
    if T < 1 or M < 1:
        raise ConfigError("need T >= 1 and M >= 1")
    if N < T + M:
        raise BudgetError(f"insufficient samples: need T+M = {T}+{M} = {T + M}, have {N}")

    y01 = ((y.astype(np.float32) + 1.0) / 2.0).astype(np.float32)
    iters = candidate_grid(T, cfg.max_candidates)
    cand_p = np.empty((len(iters), 2 * m), dtype=np.float64)
    beta_h = 1.0 / (1.0 + math.sqrt(2.0 * math.log(2 * m) / T))
    zeros = np.zeros(T, dtype=np.float32) if offs is None else offs[:T]
    loss_lo, loss_hi = _mwu_pass(
        Xf[:T], y01[:T], zeros, float(cfg.lam), math.log(beta_h), iters, cand_p
    )
    if loss_lo < -1e-12 or loss_hi > 1.0 + 1e-12:
        raise InvariantError(f"loss vector left [0,1]: [{loss_lo}, {loss_hi}]")

    cand_w = cfg.lam * (cand_p[:, :m] - cand_p[:, m:])
    risks = _holdout_risks(cand_w, Xf[T:T + M], y01[T:T + M],
                           None if offs is None else offs[T:T + M])
    best = int(np.argmin(risks))  # first index wins ties: earliest iteration
    w = cand_w[best]
    if np.abs(w).sum() > cfg.lam * (1.0 + 1e-9):
        raise InvariantError("candidate escaped the l1 ball")
    return SparsitronResult(
        w=w,
        chosen_iteration=int(iters[best]),
        holdout_risk=float(risks[best]),
        T=T,
        M=M,
        loss_min=float(loss_lo),
        loss_max=float(loss_hi),
        candidate_iterations=iters if cfg.keep_trace else None,
        candidate_risks=risks if cfg.keep_trace else None,
    )


def required_samples(cfg: SparsitronConfig, m: int) -> int:
    """Total batch size (train + holdout) the auto-sizing asks for."""
    T = cfg.sized_T(m)
    return T + cfg.sized_M(T)
