"""Structural checks on Gibbs distributions.

Everything here is a pure function of a polynomial and a distribution
source.  The source argument accepts either a GibbsTable (exact sums
over all 2^n states), a SampleBatch (Monte Carlo), or None, which
enumerates the distribution on the spot subject to the sampler's cap.

The flip difference psi^S(x) = psi(x) - psi(x with coords in S negated)
is the recurring quantity.  In exact mode it is computed for all states
at once through the xor permutation of the energy table; in Monte Carlo
mode through one matrix product against precomputed monomial columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import BudgetError, ConfigError, DimensionError, InvariantError
from .poly import Polynomial, Monomial, as_monomial
from .sampler import (ENUM_CAP, GibbsTable, SampleBatch, all_state_energies,
                      enumerate_distribution, state_to_configs)

MAX_FLIP_SETS = 200_000


def _clip01(v: float) -> float:
    # Gibbs tables sum to 1 only within 1e-9; keep fractions in range
    return min(max(float(v), 0.0), 1.0)


@dataclass
class SmoothnessReport:
    C: float
    t: int
    fraction: float
    method: str  # "exact" | "montecarlo"
    sample_count: int
    n_flip_sets: int
    worst_flip: float  # max over evaluated x of max_S |psi^S(x)|
    max_partial_in_E: Optional[float] = None  # exact mode only

    def __post_init__(self):
        if not (0.0 <= self.fraction <= 1.0):
            raise InvariantError(f"fraction {self.fraction} outside [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "C": self.C, "t": self.t, "fraction": self.fraction,
            "method": self.method, "sample_count": self.sample_count,
            "n_flip_sets": self.n_flip_sets, "worst_flip": self.worst_flip,
            "max_partial_in_E": self.max_partial_in_E,
        }


@dataclass
class MgfReport:
    S: Monomial
    B: float
    estimate: float  # inf when the log estimate exceeds float range
    log_estimate: float
    method: str
    sample_count: int
    overflow: bool

    def __post_init__(self):
        if not (self.estimate >= 1.0):
            raise InvariantError(f"MGF estimate {self.estimate} < 1")

    def to_json_dict(self) -> dict:
        return {
            "S": list(self.S), "B": self.B, "estimate": self.estimate,
            "log_estimate": self.log_estimate, "method": self.method,
            "sample_count": self.sample_count, "overflow": self.overflow,
        }


def flip_sets_up_to(n: int, t: int, cap: int = MAX_FLIP_SETS) -> list[Monomial]:
    """All index subsets of size 1..t, lexicographic within each size."""
    if t < 1 or t > n:
        raise ConfigError(f"flip order t = {t} outside [1, {n}]")
    total = sum(math.comb(n, k) for k in range(1, t + 1))
    if total > cap:
        raise BudgetError(f"{total} flip sets exceed the enumeration budget {cap}")
    out: list[Monomial] = []
    for k in range(1, t + 1):
        out.extend(combinations(range(n), k))
    return out


def _masks(subsets) -> np.ndarray:
    return np.array([sum(1 << i for i in S) for S in subsets], dtype=np.int64)


def flip_values_exact(p: Polynomial, subsets, energies: np.ndarray | None = None) -> np.ndarray:
    """psi^S over all 2^n states, one row per subset.

    Flipping the coords in S permutes the state index by xor with the
    bit mask of S, so each row is energies - energies[perm].
    """
    if energies is None:
        energies = all_state_energies(p)
    idx = np.arange(energies.size, dtype=np.int64)
    out = np.empty((len(subsets), energies.size))
    for r, mask in enumerate(_masks(subsets)):
        out[r] = energies - energies[idx ^ mask]
    return out


def flip_values_batch(p: Polynomial, subsets, X: np.ndarray) -> np.ndarray:
    """psi^S at each sample row, one output row per subset."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != p.n:
        raise DimensionError(f"batch has shape {X.shape}, expected (N, {p.n})")
    monos = list(p.terms)
    if not monos:
        return np.zeros((len(subsets), X.shape[0]))
    cols = np.empty((X.shape[0], len(monos)), dtype=np.float64)
    for j, mono in enumerate(monos):
        if mono:
            c = X[:, mono[0]].astype(np.float64)
            for i in mono[1:]:
                c = c * X[:, i]
            cols[:, j] = c
        else:
            cols[:, j] = 1.0
    coefs = np.array([p.terms[m] for m in monos])
    weights = np.empty((len(monos), len(subsets)))
    for r, S in enumerate(subsets):
        sset = set(S)
        odd = np.array([len(sset.intersection(m)) % 2 for m in monos], dtype=np.float64)
        weights[:, r] = 2.0 * coefs * odd
    return (cols @ weights).T


def membership_in_E(p: Polynomial, x, C: float, t: int,
                    max_sets: int = MAX_FLIP_SETS) -> bool:
    """Is every flip of at most t coordinates within C of psi(x)?"""
    if C < 0:
        raise ConfigError("C must be nonnegative")
    subsets = flip_sets_up_to(p.n, t, max_sets)
    x = np.asarray(x).reshape(1, -1)
    vals = flip_values_batch(p, subsets, x)
    return bool(np.abs(vals).max(initial=0.0) <= C)


def _dispatch(p: Polynomial, source) -> tuple[str, object]:
    if source is None:
        return "exact", enumerate_distribution(p)
    if isinstance(source, GibbsTable):
        if source.n != p.n:
            raise DimensionError("table and polynomial disagree on n")
        return "exact", source
    if isinstance(source, SampleBatch):
        if source.n != p.n:
            raise DimensionError("batch and polynomial disagree on n")
        return "montecarlo", source
    raise ConfigError(f"unsupported source {type(source).__name__}")


def smoothness_fraction(p: Polynomial, C: float, t: int, source=None,
                        max_sets: int = MAX_FLIP_SETS) -> SmoothnessReport:
    """Mass of configurations whose every <=t-flip moves psi by at most C."""
    if C < 0:
        raise ConfigError("C must be nonnegative")
    subsets = flip_sets_up_to(p.n, t, max_sets)
    method, src = _dispatch(p, source)
    if method == "exact":
        energies = all_state_energies(p)
        vals = np.abs(flip_values_exact(p, subsets, energies))
        maxdiff = vals.max(axis=0)
        member = maxdiff <= C
        fraction = _clip01(src.probs[member].sum())
        count = energies.size
        max_partial = None
        if member.any():
            singles = [(i,) for i in range(p.n)]
            sv = np.abs(flip_values_exact(p, singles, energies)) / 2.0
            max_partial = float(sv[:, member].max())
    else:
        X = src.data
        vals = np.abs(flip_values_batch(p, subsets, X))
        maxdiff = vals.max(axis=0)
        fraction = _clip01((maxdiff <= C).mean())
        count = X.shape[0]
        max_partial = None
    worst = float(maxdiff.max()) if maxdiff.size else 0.0
    return SmoothnessReport(C=C, t=t, fraction=fraction, method=method,
                            sample_count=count, n_flip_sets=len(subsets),
                            worst_flip=worst, max_partial_in_E=max_partial)


_LOG_FLOAT_MAX = math.log(np.finfo(np.float64).max)


def _log_mean_exp(a: np.ndarray, log_weights: np.ndarray | None = None) -> float:
    if log_weights is None:
        shift = a.max()
        return float(shift + np.log(np.exp(a - shift).mean()))
    b = a + log_weights
    shift = b.max()
    return float(shift + np.log(np.exp(b - shift).sum()))


def mgf_flip_estimate(p: Polynomial, S, B: float, source=None) -> MgfReport:
    """E[exp((psi^S(X))^2 / B)], kept in log space until the end."""
    if not B > 0:
        raise ConfigError("B must be positive")
    S = as_monomial(S, p.n)
    if len(S) == 0:
        raise ConfigError("flip set must be nonempty")
    method, src = _dispatch(p, source)
    if method == "exact":
        vals = flip_values_exact(p, [S])[0]
        log_est = _log_mean_exp(vals**2 / B, src.log_probs)
        count = vals.size
    else:
        vals = flip_values_batch(p, [S], src.data)[0]
        log_est = _log_mean_exp(vals**2 / B)
        count = vals.size
    log_est = max(log_est, 0.0)  # exp of a nonnegative variable; clip float dust
    overflow = log_est > _LOG_FLOAT_MAX
    estimate = math.inf if overflow else math.exp(log_est)
    return MgfReport(S=S, B=float(B), estimate=estimate, log_estimate=log_est,
                     method=method, sample_count=count, overflow=overflow)


def tail_fraction(p: Polynomial, S, threshold: float, source=None) -> float:
    """Pr[|psi^S(X)| / 2 > threshold]."""
    if threshold < 0:
        raise ConfigError("threshold must be nonnegative")
    S = as_monomial(S, p.n)
    if len(S) == 0:
        raise ConfigError("flip set must be nonempty")
    method, src = _dispatch(p, source)
    if method == "exact":
        vals = flip_values_exact(p, [S])[0]
        return _clip01(src.probs[np.abs(vals) / 2.0 > threshold].sum())
    vals = flip_values_batch(p, [S], src.data)[0]
    return _clip01((np.abs(vals) / 2.0 > threshold).mean())


def anticoncentration_fraction(D: GibbsTable, q: Polynomial, S) -> float:
    """Exact Pr_D[|q(X)| >= |coef of S in q|] for a maximal monomial S."""
    S = as_monomial(S, q.n)
    if D.n != q.n:
        raise DimensionError("table and polynomial disagree on n")
    if S not in q.maximal_monomials():
        raise ConfigError(f"{S} is not a maximal monomial of q")
    configs = state_to_configs(np.arange(1 << q.n), q.n)
    vals = np.abs(q.evaluate_batch(configs))
    return _clip01(D.probs[vals >= abs(q.coefficient(S))].sum())


def kl_divergence(P: GibbsTable, Q: GibbsTable) -> float:
    if P.n != Q.n:
        raise DimensionError("tables disagree on n")
    val = float(np.dot(P.probs, P.log_probs - Q.log_probs))
    return max(val, 0.0)


def tv_distance(P: GibbsTable, Q: GibbsTable) -> float:
    if P.n != Q.n:
        raise DimensionError("tables disagree on n")
    return 0.5 * float(np.abs(P.probs - Q.probs).sum())


def identifiability_margin(p: Polynomial) -> float:
    """Smallest |coefficient| over maximal monomials; inf when p = 0."""
    maximal = p.maximal_monomials()
    if not maximal:
        return math.inf
    return min(abs(p.terms[m]) for m in maximal)
