"""Exact enumeration sampling and single-site Glauber dynamics.

State indexing convention: state ``s`` (an integer in [0, 2^n)) maps to
the configuration with ``x_i = 1 - 2 * bit_i(s)``, i.e. bit 0 means
x_i = +1 and flipping coordinate i is ``s ^ (1 << i)``.  The Gibbs law
is D(x) = exp(psi(x)) / Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import BudgetError, ConfigError, DimensionError, InvariantError
from .poly import Polynomial

ENUM_CAP = 24  # default n cap for full enumeration; override explicitly


def _check_cap(n: int, cap: int, force: bool) -> None:
    if n > cap and not force:
        raise BudgetError(f"enumeration over 2^{n} states exceeds cap n <= {cap}")


def state_to_configs(states: np.ndarray, n: int) -> np.ndarray:
    """(N,) state indices -> (N, n) int8 +/-1 configurations."""
    bits = (states[:, None] >> np.arange(n, dtype=states.dtype)) & 1
    return (1 - 2 * bits).astype(np.int8)


def config_to_state(x) -> int:
    x = np.asarray(x)
    bits = (1 - x.astype(np.int64)) // 2
    return int((bits << np.arange(x.shape[0])).sum())


def _parity(v: np.ndarray) -> np.ndarray:
    """Bit parity of each uint32 entry, as 0/1."""
    v = v.copy()
    v ^= v >> np.uint32(16)
    v ^= v >> np.uint32(8)
    v ^= v >> np.uint32(4)
    v &= np.uint32(0xF)
    return ((np.uint32(0x6996) >> v) & np.uint32(1)).astype(np.uint8)


def all_state_energies(p: Polynomial, cap: int = ENUM_CAP, force: bool = False) -> np.ndarray:
    """psi(x) for every state index, using parity tricks per monomial."""
    _check_cap(p.n, cap, force)
    size = 1 << p.n
    states = np.arange(size, dtype=np.uint32)
    out = np.zeros(size, dtype=np.float64)
    for mono, c in p.terms.items():
        if not mono:
            out += c
            continue
        mask = np.uint32(0)
        for i in mono:
            mask |= np.uint32(1 << i)
        par = _parity(states & mask)
        out += c * (1.0 - 2.0 * par.astype(np.float64))
    return out


@dataclass
class GibbsTable:
    """Full distribution table for psi on n <= cap variables."""

    n: int
    probs: np.ndarray
    logz: float
    log_probs: np.ndarray

    def __post_init__(self):
        if self.probs.shape != (1 << self.n,):
            raise DimensionError("probability table has wrong length")
        s = float(self.probs.sum())
        if abs(s - 1.0) > 1e-9:
            raise InvariantError(f"probabilities sum to {s}, not 1")


def enumerate_distribution(p: Polynomial, cap: int = ENUM_CAP, force: bool = False) -> GibbsTable:
    """Exact Gibbs table; logZ via a max-shifted log-sum-exp."""
    energies = all_state_energies(p, cap, force)
    m = float(energies.max())
    logz = m + math.log(np.exp(energies - m).sum())
    log_probs = energies - logz
    return GibbsTable(p.n, np.exp(log_probs), logz, log_probs)


@dataclass
class SampleBatch:
    """Rows of +/-1 configurations plus provenance metadata."""

    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.int8)
        if self.data.ndim != 2:
            raise DimensionError("sample data must be a 2-D array")
        if self.data.size and not np.all(np.abs(self.data) == 1):
            raise ConfigError("sample entries must be +/-1")
        if not isinstance(self.meta, dict):
            raise ConfigError("batch meta must be a dict")

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    def is_iid(self) -> bool:
        return bool(self.meta.get("iid", False))


def exact_sample(
    p: Polynomial,
    n_samples: int,
    seed: int,
    cap: int = ENUM_CAP,
    force: bool = False,
    extra_meta: dict | None = None,
) -> SampleBatch:
    """Independent draws from the exact Gibbs law via inverse CDF."""
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    table = enumerate_distribution(p, cap, force)
    cdf = np.cumsum(table.probs)
    cdf[-1] = 1.0
    rng = np.random.default_rng(seed)
    idx = np.searchsorted(cdf, rng.random(n_samples), side="right").astype(np.uint32)
    meta = {
        "sampler": "exact",
        "seed": int(seed),
        "iid": True,
        "n": p.n,
        "n_samples": int(n_samples),
        "model_hash": p.model_hash(),
    }
    if extra_meta:
        meta.update(extra_meta)
    return SampleBatch(state_to_configs(idx, p.n), meta)


def conditional_prob(p: Polynomial, x, i: int) -> float:
    """Pr[X_i = +1 | X_-i = x_-i] = sigmoid(2 * dpsi/dx_i (x))."""
    if not 0 <= i < p.n:
        raise DimensionError(f"site {i} out of range for n={p.n}")
    return float(expit(2.0 * p.partial(i).evaluate(x)))


def _site_terms(p: Polynomial) -> list[list[tuple[float, tuple[int, ...]]]]:
    by_site: list[list[tuple[float, tuple[int, ...]]]] = [[] for _ in range(p.n)]
    for mono, c in p.terms.items():
        for i in mono:
            by_site[i].append((c, tuple(j for j in mono if j != i)))
    return by_site


def glauber_chain(
    p: Polynomial,
    n_samples: int,
    seed: int,
    burn_in: int = 0,
    thinning: int = 1,
    x0=None,
    extra_meta: dict | None = None,
) -> SampleBatch:
    """Heat-bath single-site dynamics; records every `thinning`-th state.

    Each step picks a uniform site and resamples it from its exact
    conditional.  The output is not i.i.d.; the batch metadata says so
    and downstream learners warn when fed such samples.
    """
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    if burn_in < 0 or thinning < 0:
        raise ConfigError("burn_in and thinning must be nonnegative")
    thinning = max(thinning, 1)
    n = p.n
    rng = np.random.default_rng(seed)
    if x0 is None:
        x = (1 - 2 * rng.integers(0, 2, size=n)).astype(np.int8)
    else:
        x = np.asarray(x0, dtype=np.int8).copy()
        if x.shape != (n,) or (n and not np.all(np.abs(x) == 1)):
            raise ConfigError("x0 must be a +/-1 configuration of length n")
    site_terms = _site_terms(p)
    total = burn_in + n_samples * thinning
    out = np.empty((n_samples, n), dtype=np.int8)
    sites = rng.integers(0, n, size=total)
    us = rng.random(total)
    kept = 0
    for step in range(total):
        i = sites[step]
        acc = 0.0
        for c, rest in site_terms[i]:
            v = c
            for j in rest:
                v *= x[j]
            acc += v
        x[i] = 1 if us[step] < expit(2.0 * acc) else -1
        if step >= burn_in and (step - burn_in + 1) % thinning == 0:
            out[kept] = x
            kept += 1
    if kept != n_samples:
        raise InvariantError("glauber bookkeeping drift")
    meta = {
        "sampler": "glauber",
        "seed": int(seed),
        "iid": False,
        "burn_in": int(burn_in),
        "thinning": int(thinning),
        "n": n,
        "n_samples": int(n_samples),
        "model_hash": p.model_hash(),
    }
    if extra_meta:
        meta.update(extra_meta)
    return SampleBatch(out, meta)


def glauber_transition_matrix(p: Polynomial, cap: int = 12, force: bool = False) -> np.ndarray:
    """Dense single-step kernel K[s, s'] of the heat-bath chain."""
    _check_cap(p.n, cap, force)
    n = p.n
    size = 1 << n
    states = np.arange(size, dtype=np.uint32)
    K = np.zeros((size, size))
    for i in range(n):
        dvals = all_state_energies(p.partial(i), cap=n, force=True)
        q_plus = expit(2.0 * dvals)  # prob. the resampled x_i is +1 (bit 0)
        bit = np.uint32(1 << i)
        s_plus = (states & ~bit).astype(np.int64)
        s_minus = (states | bit).astype(np.int64)
        np.add.at(K, (states.astype(np.int64), s_plus), q_plus / n)
        np.add.at(K, (states.astype(np.int64), s_minus), (1.0 - q_plus) / n)
    return K


def save_batch(batch: SampleBatch, path, header_note: str = "") -> None:
    """Write configurations as CSV plus a .meta.json sidecar."""
    import json
    from pathlib import Path

    path = Path(path)
    with path.open("w") as f:
        if header_note:
            f.write(f"# {header_note}\n")
        np.savetxt(f, batch.data, fmt="%d", delimiter=",")
    meta_path = path.with_suffix(path.suffix + ".meta.json") if path.suffix != ".csv" \
        else path.with_name(path.stem + ".meta.json")
    meta_path.write_text(json.dumps(batch.meta, sort_keys=True, indent=2) + "\n")


def load_batch(path) -> SampleBatch:
    """Read a CSV of +/-1 rows and its .meta.json sidecar if present."""
    import json
    from pathlib import Path

    path = Path(path)
    data = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    meta_path = path.with_name(path.stem + ".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return SampleBatch(data.astype(np.int8), meta)


def sample_batch_from_model(spec_meta: dict, p: Polynomial, sampler: str, n_samples: int,
                            seed: int, burn_in: int = 0, thinning: int = 1,
                            cap: int = ENUM_CAP, force: bool = False) -> SampleBatch:
    """Sampler dispatch used by the CLI; tags the batch with ensemble meta."""
    # the generated model's width rides along so recovery can bound lam
    extra = {"ensemble": dict(spec_meta, width=float(p.width()))} if spec_meta else None
    if sampler == "exact":
        return exact_sample(p, n_samples, seed, cap=cap, force=force, extra_meta=extra)
    if sampler == "glauber":
        return glauber_chain(p, n_samples, seed, burn_in=burn_in, thinning=thinning, extra_meta=extra)
    raise ConfigError(f"unknown sampler {sampler!r}")
