"""Parameter and structure recovery from samples.

All pipelines share one nodewise engine: for each variable i, learn the
conditional law Pr[X_i = 1 | X_-i] = sigmoid(2 * dpsi/dx_i) with the
multiplicative-weights learner over monomial features of the other
variables, then read model coefficients off the learned vector (the
factor 1/2 undoes the 2 in the conditional).

Budgets.  Each pipeline derives an inner squared-risk target for the
learner from the outer tolerance via an exp(-c_E * C) conversion, and
the auto-sizing formulas turn that into requested (T, M).  At desk
scale those requests can be astronomically larger than any real batch,
so by default (``fit_budget=True``) the pipeline instead spends the
whole provided batch (an 80/20 train/holdout split) and logs both the
requested and realized sizes in the report; with ``fit_budget=False``
an underfunded run raises BudgetError.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, asdict
from itertools import combinations

import numpy as np

from .errors import BudgetError, ConfigError, DimensionError
from .generate import mrf_coeff_scale
from .graphs import Graph
from .poly import IsingModel, Polynomial, Monomial
from .sampler import SampleBatch
from .sparsitron import SparsitronConfig, SparsitronResult, sparsitron

_MAX_SIZED = 2**62


class FeatureMap:
    """Ordered monomial features over a variable subset.

    The order is the constant () first, then the remaining monomials of
    size <= degree sorted lexicographically by index tuple.
    """

    def __init__(self, n: int, degree: int, variables=None):
        if degree < 0:
            raise ConfigError("feature degree must be nonnegative")
        self.n = int(n)
        self.degree = int(degree)
        vars_ = tuple(range(n)) if variables is None else tuple(sorted(variables))
        if vars_ and (vars_[0] < 0 or vars_[-1] >= n):
            raise DimensionError("feature variables out of range")
        monos = []
        for k in range(1, degree + 1):
            monos.extend(combinations(vars_, k))
        self.monomials: tuple[Monomial, ...] = ((),) + tuple(sorted(monos))
        self._index = {m: j for j, m in enumerate(self.monomials)}

    @classmethod
    def for_node(cls, n: int, degree: int, skip: int) -> FeatureMap:
        return cls(n, degree, [v for v in range(n) if v != skip])

    @property
    def m(self) -> int:
        return len(self.monomials)

    def index(self, mono) -> int:
        return self._index[tuple(mono)]

    def expand(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise DimensionError(f"configuration has shape {x.shape}, expected ({self.n},)")
        out = np.empty(self.m, dtype=np.float64)
        for j, mono in enumerate(self.monomials):
            v = 1.0
            for i in mono:
                v *= x[i]
            out[j] = v
        return out

    def expand_batch(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise DimensionError(f"batch has shape {X.shape}, expected (N, {self.n})")
        out = np.empty((X.shape[0], self.m), dtype=np.float32)
        out[:, 0] = 1.0
        for j, mono in enumerate(self.monomials[1:], start=1):
            col = X[:, mono[0]].astype(np.int8)
            for i in mono[1:]:
                col = col * X[:, i]
            out[:, j] = col
        return out


def expand_features(x, fm: FeatureMap) -> np.ndarray:
    return fm.expand(x)


def round_to_grid(value: float, step: float) -> float:
    """Nearest multiple of step; exact midpoints round toward zero."""
    if not (step > 0 and math.isfinite(step)):
        raise ConfigError("grid step must be positive and finite")
    m = abs(value) / step
    q = math.floor(m)
    if m - q > 0.5:
        q += 1
    out = q * step
    return out if value >= 0 else -out


@dataclass
class RecoveryConfig:
    t: int = 2
    epsilon: float = 0.1
    delta: float = 0.1
    lam: float = 0.0  # 0 = auto from the batch's ensemble metadata
    C: float = 0.0  # 0 = auto c_C * (beta^2 t + beta t sqrt(ln n))
    c_C: float = 4.0
    c_E: float = 10.0
    eta: float = 0.0  # 0 = auto identifiability margin
    K: int = 0  # 0 = auto median-test repetitions
    c_K: float = 10.0
    inner_epsilon: float = 0.0  # 0 = derive exp(-c_E C) * eps^2
    fit_budget: bool = True
    holdout_frac: float = 0.2
    max_candidates: int = 256
    c_T: float = 10.0
    c_M: float = 10.0

    def validate(self) -> None:
        if self.t < 1:
            raise ConfigError("order t must be >= 1")
        if not (0 < self.epsilon <= 1):
            raise ConfigError("epsilon must lie in (0, 1]")
        if not (0 < self.delta < 1):
            raise ConfigError("delta must lie in (0, 1)")
        if self.lam < 0 or self.C < 0 or self.eta < 0 or self.inner_epsilon < 0:
            raise ConfigError("lam, C, eta, inner_epsilon must be nonnegative")
        if not (0 < self.holdout_frac < 1):
            raise ConfigError("holdout_frac must lie in (0, 1)")

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> RecoveryConfig:
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"malformed recovery config: {exc}") from exc


@dataclass
class RecoveryReport:
    mode: str
    estimate: object
    node_risks: list = field(default_factory=list)
    node_chosen_iters: list = field(default_factory=list)
    node_estimates: list = field(default_factory=list)  # per-node {monomial: coef/2}
    budget: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    wallclock_s: float = 0.0
    config: dict = field(default_factory=dict)
    linf_error: float | None = None
    l1_error: float | None = None
    structure_precision: float | None = None
    structure_recall: float | None = None
    kl: float | None = None
    tv: float | None = None

    def to_json_dict(self) -> dict:
        if isinstance(self.estimate, (IsingModel, Polynomial, Graph)):
            est = self.estimate.to_json_dict()
        else:
            est = self.estimate
        return {
            "mode": self.mode,
            "estimate": est,
            "node_risks": self.node_risks,
            "node_chosen_iters": self.node_chosen_iters,
            "budget": self.budget,
            "warnings": self.warnings,
            "wallclock_s": self.wallclock_s,
            "config": self.config,
            "linf_error": self.linf_error,
            "l1_error": self.l1_error,
            "structure_precision": self.structure_precision,
            "structure_recall": self.structure_recall,
            "kl": self.kl,
            "tv": self.tv,
        }


# -- auto-bound resolution -----------------------------------------------------


def _ensemble_info(batch: SampleBatch) -> dict | None:
    info = batch.meta.get("ensemble")
    return dict(info) if isinstance(info, dict) else None


def _field_allowance(info: dict) -> float:
    mode = info.get("field_mode", "zero")
    if mode == "gaussian":
        return abs(info.get("field_mean", 0.0)) + 3.0 * info.get("field_sigma", 1.0)
    if mode == "rademacher":
        return 1.0
    return 0.0


def _auto_lambda(info: dict | None, n: int, t: int) -> float:
    """Width bound on the nodewise target 2 * dpsi/dx_i from ensemble meta."""
    if info is None:
        raise ConfigError("lam = 0 needs ensemble metadata on the batch; set lam explicitly")
    beta, d = float(info["beta"]), int(info["d"])
    logn = math.log(max(n, 2))
    kind = info["kind"]
    if kind == "sk":
        lam = 2.0 * beta * math.sqrt(n * logn) + 2.0 * _field_allowance(info)
    elif kind == "pure_spin":
        # meta carries the generated model's true width
        lam = 2.0 * float(info["width"])
    elif info.get("weight_dist") == "rademacher":
        lam = 2.0 * beta * (d + 1) ** ((t + 1) / 2.0) + 2.0 * _field_allowance(info)
    else:
        lam = 2.0 * beta * (d + 1) ** ((t + 1) / 2.0) * math.sqrt(t * logn) + 2.0 * _field_allowance(info)
    return lam if lam > 0 else 1.0  # beta = 0 ensembles still need a valid radius


def _auto_C(info: dict | None, n: int, t: int, c_C: float) -> float:
    if info is None:
        raise ConfigError("C = 0 needs ensemble metadata on the batch; set C explicitly")
    beta = float(info["beta"])
    val = c_C * (beta**2 * t + beta * t * math.sqrt(math.log(max(n, 2))))
    return val if val > 0 else 1.0


def _auto_eta(info: dict | None, n: int, t: int, warn: list) -> float:
    if info is None:
        raise ConfigError("eta = 0 needs ensemble metadata on the batch; set eta explicitly")
    beta, d = float(info["beta"]), int(info["d"])
    if info.get("weight_dist") == "rademacher":
        return mrf_coeff_scale(beta, d, t)
    eta = beta / (2.0 * float(n) ** (2.5 * t))
    msg = (f"gaussian ensemble: identifiability margin defaulted to the worst-case "
           f"{eta:.3e}; the median test threshold is almost certainly too small")
    warn.append(msg)
    warnings.warn(msg)
    return eta


def _sized_or_none(ln_val: float) -> int | None:
    if ln_val > math.log(_MAX_SIZED):
        return None
    return int(math.ceil(math.exp(ln_val)))


def _plan_budget(N: int, m: int, lam: float, ln_eps: float, delta_node: float,
                 cfg: RecoveryConfig) -> tuple[int, int, dict]:
    """Requested vs realized (T, M) for one nodewise learner call."""
    ln_arg = math.log(2 * m) - math.log(delta_node) - ln_eps
    ln_T = math.log(cfg.c_T) + 2.0 * math.log(lam) + math.log(ln_arg) - 2.0 * ln_eps
    T_req = _sized_or_none(ln_T)
    M_req = None
    if T_req is not None:
        ln_M = math.log(cfg.c_M) + math.log(math.log(T_req / delta_node)) - 2.0 * ln_eps
        M_req = _sized_or_none(ln_M)
    audit = {
        "lam": lam,
        "log10_inner_eps": ln_eps / math.log(10.0),
        "requested_T": T_req,
        "requested_M": M_req,
        "delta_node": delta_node,
    }
    if T_req is not None and M_req is not None and N >= T_req + M_req:
        audit.update(T=T_req, M=M_req, mode="met")
        return T_req, M_req, audit
    if not cfg.fit_budget:
        t_s = str(T_req) if T_req is not None else "overflow"
        m_s = str(M_req) if M_req is not None else "overflow"
        raise BudgetError(
            f"insufficient samples for the derived inner budget: requested "
            f"T={t_s}, M={m_s}, available {N}"
        )
    M = max(1, int(N * cfg.holdout_frac))
    if M_req is not None:
        M = min(M, M_req)
    T = N - M
    if T < 1:
        raise BudgetError(f"batch of {N} samples is too small to split")
    audit.update(T=T, M=M, mode="fitted")
    return T, M, audit


def _inner_ln_eps(cfg: RecoveryConfig, C: float, kind: str, extra: dict | None = None) -> float:
    if cfg.inner_epsilon > 0:
        return math.log(cfg.inner_epsilon)
    if kind == "param":
        return -cfg.c_E * C + 2.0 * math.log(cfg.epsilon)
    if kind == "structure":
        eta = extra["eta"]
        t = extra["t"]
        return 2.0 * math.log(eta) - (t + 4) * math.log(2.0) - (cfg.c_E * C + 6.0)
    if kind == "exact":
        beta, d, t = extra["beta"], extra["d"], extra["t"]
        return (-(cfg.c_E * C + 6.0) + 2.0 * math.log(beta)
                - math.log(16.0) - t * math.log(2.0 * max(d, 1)))
    raise ConfigError(f"unknown budget kind {kind!r}")


def _spars_config(cfg: RecoveryConfig, lam: float, ln_eps: float, delta_node: float,
                  T: int, M: int) -> SparsitronConfig:
    eps_record = min(1.0, max(math.exp(ln_eps), 1e-300))
    return SparsitronConfig(
        lam=lam, epsilon=eps_record, delta=delta_node, T=T, M=M,
        c_T=cfg.c_T, c_M=cfg.c_M, max_candidates=cfg.max_candidates,
    )


def _fit_node(data: np.ndarray, node: int, degree: int, scfg: SparsitronConfig,
              offsets: np.ndarray | None = None) -> tuple[FeatureMap, SparsitronResult]:
    n = data.shape[1]
    fm = FeatureMap.for_node(n, degree, node)
    feats = fm.expand_batch(data)
    res = sparsitron(feats, data[:, node], scfg, offsets=offsets)
    return fm, res


def _warn_not_iid(batch: SampleBatch, warn: list) -> None:
    if not batch.is_iid():
        msg = "samples are not flagged i.i.d. (Glauber or unknown origin); recovery guarantees do not apply"
        warn.append(msg)
        warnings.warn(msg)


# -- pipelines -----------------------------------------------------------------


def recover_ising(batch: SampleBatch, cfg: RecoveryConfig) -> RecoveryReport:
    """Nodewise estimate of (A, h); couplings symmetrized by averaging."""
    cfg.validate()
    t0 = time.perf_counter()
    n = batch.n
    if n < 2:
        raise ConfigError("need at least two variables")
    warn: list[str] = []
    _warn_not_iid(batch, warn)
    info = _ensemble_info(batch)
    lam = cfg.lam if cfg.lam > 0 else _auto_lambda(info, n, 2)
    C = cfg.C if cfg.C > 0 else _auto_C(info, n, 2, cfg.c_C)
    ln_eps = _inner_ln_eps(cfg, C, "param")
    m = FeatureMap.for_node(n, 1, 0).m
    T, M, audit = _plan_budget(batch.n_samples, m, lam, ln_eps, cfg.delta / n, cfg)
    audit["C"] = C
    scfg = _spars_config(cfg, lam, ln_eps, cfg.delta / n, T, M)
    data = batch.data[: T + M]

    A_node = np.zeros((n, n))
    h_hat = np.zeros(n)
    risks, iters, estimates = [], [], []
    for i in range(n):
        fm, res = _fit_node(data, i, 1, scfg)
        h_hat[i] = res.w[fm.index(())] / 2.0
        for j in range(n):
            if j != i:
                A_node[i, j] = res.w[fm.index((j,))] / 2.0
        risks.append(res.holdout_risk)
        iters.append(res.chosen_iteration)
        estimates.append({mono: res.w[k] / 2.0 for k, mono in enumerate(fm.monomials)})
    A_hat = (A_node + A_node.T) / 2.0
    est = IsingModel(n, A_hat, h_hat)
    return RecoveryReport(
        mode="ising", estimate=est, node_risks=risks, node_chosen_iters=iters,
        node_estimates=estimates, budget=audit, warnings=warn,
        wallclock_s=time.perf_counter() - t0, config=cfg.to_json_dict(),
    )


def recover_mrf(batch: SampleBatch, cfg: RecoveryConfig) -> RecoveryReport:
    """Estimate all coefficients of a degree-t model.

    Node i's learner sees monomial features of degree <= t-1 on the
    other variables; coefficient S is taken from node min(S).
    """
    cfg.validate()
    t0 = time.perf_counter()
    n, t = batch.n, cfg.t
    if t < 2:
        raise ConfigError("recover_mrf needs t >= 2; use recover_ising for pairwise")
    if n < 2:
        raise ConfigError("need at least two variables")
    warn: list[str] = []
    _warn_not_iid(batch, warn)
    info = _ensemble_info(batch)
    lam = cfg.lam if cfg.lam > 0 else _auto_lambda(info, n, t)
    C = cfg.C if cfg.C > 0 else _auto_C(info, n, t, cfg.c_C)
    ln_eps = _inner_ln_eps(cfg, C, "param")
    m = FeatureMap.for_node(n, t - 1, 0).m
    T, M, audit = _plan_budget(batch.n_samples, m, lam, ln_eps, cfg.delta / n, cfg)
    audit["C"] = C
    scfg = _spars_config(cfg, lam, ln_eps, cfg.delta / n, T, M)
    data = batch.data[: T + M]

    terms: dict[Monomial, float] = {}
    risks, iters, estimates = [], [], []
    for i in range(n):
        fm, res = _fit_node(data, i, t - 1, scfg)
        for k, mono in enumerate(fm.monomials):
            S = tuple(sorted(mono + (i,)))
            if S[0] == i:
                terms[S] = res.w[k] / 2.0
        risks.append(res.holdout_risk)
        iters.append(res.chosen_iteration)
        estimates.append({mono: res.w[k] / 2.0 for k, mono in enumerate(fm.monomials)})
    est = Polynomial(n, t, terms)
    return RecoveryReport(
        mode="mrf", estimate=est, node_risks=risks, node_chosen_iters=iters,
        node_estimates=estimates, budget=audit, warnings=warn,
        wallclock_s=time.perf_counter() - t0, config=cfg.to_json_dict(),
    )


def learn_structure_report(batch: SampleBatch, cfg: RecoveryConfig) -> RecoveryReport:
    """Dependency graph via the median flip test on learned conditionals."""
    cfg.validate()
    t0 = time.perf_counter()
    n, t = batch.n, cfg.t
    if n < 2:
        raise ConfigError("need at least two variables")
    warn: list[str] = []
    _warn_not_iid(batch, warn)
    info = _ensemble_info(batch)
    eta = cfg.eta if cfg.eta > 0 else _auto_eta(info, n, t, warn)
    if eta == 0:
        raise ConfigError("identifiability margin eta must be positive")
    lam = cfg.lam if cfg.lam > 0 else _auto_lambda(info, n, t)
    C = cfg.C if cfg.C > 0 else _auto_C(info, n, t, cfg.c_C)
    K = cfg.K if cfg.K > 0 else int(math.ceil(cfg.c_K * math.log(n**t / cfg.delta)))
    N = batch.n_samples
    if N <= K:
        raise BudgetError(f"batch of {N} cannot spare K = {K} median samples")
    ln_eps = _inner_ln_eps(cfg, C, "structure", {"eta": eta, "t": t})
    m = FeatureMap.for_node(n, max(t - 1, 1), 0).m
    T, M, audit = _plan_budget(N - K, m, lam, ln_eps, cfg.delta / n, cfg)
    audit.update(C=C, eta=eta, K=K,
                 slices={"fit": [0, T + M], "median": [N - K, N]})
    scfg = _spars_config(cfg, lam, ln_eps, cfg.delta / n, T, M)
    fit_data = batch.data[: T + M]
    med_data = batch.data[N - K:]

    edges: set[tuple[int, int]] = set()
    risks, iters = [], []
    for i in range(n):
        fm, res = _fit_node(fit_data, i, max(t - 1, 1), scfg)
        p_i = Polynomial(n, max(t - 1, 1), {mono: res.w[k] for k, mono in enumerate(fm.monomials)})
        risks.append(res.holdout_risk)
        iters.append(res.chosen_iteration)
        for mono in fm.monomials[1:]:
            vals = p_i.partial_set(mono).evaluate_batch(med_data)
            if float(np.median(np.abs(vals))) / 2.0 > eta / 2.0:
                clique = mono + (i,)
                for a, b in combinations(sorted(clique), 2):
                    edges.add((a, b))
    est = Graph(n, tuple(sorted(edges)))
    return RecoveryReport(
        mode="structure", estimate=est, node_risks=risks, node_chosen_iters=iters,
        budget=audit, warnings=warn, wallclock_s=time.perf_counter() - t0,
        config=cfg.to_json_dict(),
    )


def learn_structure(batch: SampleBatch, cfg: RecoveryConfig) -> Graph:
    return learn_structure_report(batch, cfg).estimate


def exact_recover_report(batch: SampleBatch, beta: float, d: int, t: int,
                         cfg: RecoveryConfig) -> RecoveryReport:
    """Recover Rademacher-grid coefficients exactly, top degree first.

    Stage j learns each node's conditional with features of degree
    <= j-1 and the already-recovered degrees > j supplied as a known
    offset, then rounds the degree-j coefficients to the ensemble grid.
    Stages consume disjoint front-to-back slices of the batch.
    """
    cfg.validate()
    t0 = time.perf_counter()
    n = batch.n
    if t < 1:
        raise ConfigError("order t must be >= 1")
    if not beta > 0:
        raise ConfigError("exact recovery needs beta > 0")
    warn: list[str] = []
    _warn_not_iid(batch, warn)
    info = _ensemble_info(batch)
    kind = None
    if info is not None:
        kind = info.get("kind")
        if info.get("weight_dist") != "rademacher":
            raise ConfigError("exact recovery requires a Rademacher ensemble")
        if kind == "random_ising" and info.get("field_mode") == "gaussian":
            raise ConfigError("exact recovery requires a Rademacher or zero field")
    lam = cfg.lam if cfg.lam > 0 else 2.0 * beta * (d + 1) ** ((t + 1) / 2.0) + 2.0
    C = cfg.C if cfg.C > 0 else cfg.c_C * (beta**2 * t + beta * t * math.sqrt(math.log(max(n, 2))))
    ln_eps = _inner_ln_eps(cfg, C, "exact", {"beta": beta, "d": d, "t": t})
    clique_step = mrf_coeff_scale(beta, d, t)

    N = batch.n_samples
    splits = np.array_split(np.arange(N), t)
    stage_audits = []
    risks, iters = [], []
    recovered: dict[Monomial, float] = {}
    for stage_idx, j in enumerate(range(t, 0, -1)):
        sl = splits[stage_idx]
        if len(sl) < 2:
            raise BudgetError(f"stage {j} slice has {len(sl)} samples")
        data = batch.data[sl[0]: sl[-1] + 1]
        grid = 1.0 if (j == 1 and kind == "random_ising") else clique_step
        g_poly = Polynomial(n, t, {S: c for S, c in recovered.items() if len(S) > j})
        m = FeatureMap.for_node(n, j - 1, 0).m
        T, M, audit = _plan_budget(len(data), m, lam, ln_eps, cfg.delta / (n * t), cfg)
        audit.update(C=C, stage=j, grid=grid, slice=[int(sl[0]), int(sl[-1] + 1)])
        stage_audits.append(audit)
        scfg = _spars_config(cfg, lam, ln_eps, cfg.delta / (n * t), T, M)
        fit_data = data[: T + M]
        for i in range(n):
            g_i = g_poly.partial(i) * 2.0
            offs = g_i.evaluate_batch(fit_data) if len(g_i) else None
            fm, res = _fit_node(fit_data, i, j - 1, scfg, offsets=offs)
            risks.append(res.holdout_risk)
            iters.append(res.chosen_iteration)
            for k, mono in enumerate(fm.monomials):
                if len(mono) != j - 1:
                    continue
                S = tuple(sorted(mono + (i,)))
                if S[0] != i:
                    continue
                val = round_to_grid(res.w[k] / 2.0, grid)
                if val != 0.0:
                    recovered[S] = val
    est = Polynomial(n, t, recovered)
    return RecoveryReport(
        mode="exact", estimate=est, node_risks=risks, node_chosen_iters=iters,
        budget={"lam": lam, "C": C, "log10_inner_eps": ln_eps / math.log(10.0),
                "stages": stage_audits},
        warnings=warn, wallclock_s=time.perf_counter() - t0, config=cfg.to_json_dict(),
    )


def exact_recover(batch: SampleBatch, beta: float, d: int, t: int,
                  cfg: RecoveryConfig) -> Polynomial:
    return exact_recover_report(batch, beta, d, t, cfg).estimate


def structure_from_poly(p: Polynomial) -> Graph:
    """Pairs of variables that co-occur in some monomial of p."""
    edges = set()
    for mono in p.terms:
        for a, b in combinations(mono, 2):
            edges.add((a, b))
    return Graph(p.n, tuple(sorted(edges)))
