"""Random model ensembles.

Four families:

* ``gen_sk``:       complete-graph couplings (beta/sqrt(n)) * N(0,1).
* ``gen_random_ising``: couplings on the edges of a graph G, entries
  (beta/sqrt(d+1)) * N(0,1) or (beta/sqrt(d+1)) * Rademacher with d the
  max degree; field entries are 0, N(mean, sigma^2), or Rademacher,
  unscaled by beta.
* ``gen_random_mrf``: one term per clique of G of size 1..t with
  coefficient (beta/(d+1)^((t-1)/2)) * (N(0,1) or Rademacher).
* ``gen_pure_p_spin``: sum over all n^t ordered multi-indices of
  (beta/n^((t-1)/2)) * N(0,1) times the corresponding spin product,
  collapsed exactly onto multilinear monomials (x_i^2 = 1); the
  constant term is dropped.

Every draw is keyed by (seed, stream tag, canonical term id), so a
model depends only on its EnsembleSpec and never on enumeration order.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, asdict, replace

import numpy as np

from . import seeds
from .errors import BudgetError, ConfigError, DimensionError
from .graphs import Graph, complete_graph, parse_graph_spec
from .poly import IsingModel, Polynomial

WEIGHT_DISTS = ("gaussian", "rademacher")
FIELD_MODES = ("zero", "gaussian", "rademacher")
KINDS = ("sk", "random_ising", "random_mrf", "pure_spin")

PURE_SPIN_BUDGET = 10**8


def mrf_coeff_scale(beta: float, d: int, t: int) -> float:
    """Coefficient magnitude beta/(d+1)^((t-1)/2) shared with recovery."""
    return beta / float(d + 1) ** ((t - 1) / 2.0)


def _pair_ids(n: int, pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.uint64)
    return arr[:, 0] * np.uint64(n) + arr[:, 1]


def _subset_id(mono, n: int) -> int:
    """Injective base-(n+1) code of a sorted index tuple."""
    code = 0
    for i in mono:
        code = code * (n + 1) + (i + 1)
    return code


def _draw(seed: int, tag: int, ids: np.ndarray, dist: str) -> np.ndarray:
    if dist == "gaussian":
        return seeds.keyed_normals(seed, tag, ids)
    if dist == "rademacher":
        return seeds.keyed_signs(seed, tag, ids)
    raise ConfigError(f"unknown weight distribution {dist!r}")


def _field(n: int, mode: str, seed: int, mean: float, sigma: float) -> np.ndarray:
    ids = np.arange(n, dtype=np.uint64)
    if mode == "zero":
        return np.zeros(n)
    if mode == "gaussian":
        return mean + sigma * seeds.keyed_normals(seed, seeds.TAG_FIELD, ids)
    if mode == "rademacher":
        return seeds.keyed_signs(seed, seeds.TAG_FIELD, ids)
    raise ConfigError(f"unknown field mode {mode!r}")


def gen_sk(
    n: int,
    beta: float,
    seed: int,
    field_mode: str = "zero",
    field_mean: float = 0.0,
    field_sigma: float = 1.0,
) -> IsingModel:
    """Sherrington-Kirkpatrick couplings with an optional random field."""
    if n < 1:
        raise ConfigError("gen_sk requires n >= 1")
    if beta < 0:
        raise ConfigError("beta must be nonnegative")
    iu, ju = np.triu_indices(n, k=1)
    g = seeds.keyed_normals(seed, seeds.TAG_PAIRS, iu.astype(np.uint64) * np.uint64(n) + ju)
    A = np.zeros((n, n))
    A[iu, ju] = (beta / math.sqrt(n)) * g
    A = A + A.T
    return IsingModel(n, A, _field(n, field_mode, seed, field_mean, field_sigma))


def gen_random_ising(
    G: Graph,
    beta: float,
    seed: int,
    weight_dist: str = "gaussian",
    field_mode: str = "zero",
    field_mean: float = 0.0,
    field_sigma: float = 1.0,
) -> IsingModel:
    """Couplings on the edges of G, scaled by beta/sqrt(d+1)."""
    if beta < 0:
        raise ConfigError("beta must be nonnegative")
    n, d = G.n, G.max_degree
    A = np.zeros((n, n))
    if G.edges:
        ids = _pair_ids(n, G.edges)
        w = (beta / math.sqrt(d + 1)) * _draw(seed, seeds.TAG_PAIRS, ids, weight_dist)
        for (u, v), c in zip(G.edges, w):
            A[u, v] = c
            A[v, u] = c
    return IsingModel(n, A, _field(n, field_mode, seed, field_mean, field_sigma))


def gen_random_mrf(G: Graph, beta: float, t: int, seed: int, weight_dist: str = "gaussian") -> Polynomial:
    """One random term per clique of size 1..t in G."""
    if t < 1:
        raise ConfigError("order t must be >= 1")
    if beta < 0:
        raise ConfigError("beta must be nonnegative")
    cliques = G.cliques_up_to(t)
    scale = mrf_coeff_scale(beta, G.max_degree, t)
    ids = np.asarray([_subset_id(c, G.n) for c in cliques], dtype=np.uint64)
    if len(cliques):
        w = scale * _draw(seed, seeds.TAG_CLIQUE, ids, weight_dist)
    else:
        w = np.zeros(0)
    return Polynomial(G.n, min(t, G.n), {c: v for c, v in zip(cliques, w)})


def _pure_two_spin(n: int, beta: float, seed: int) -> Polynomial:
    ids = (np.arange(n, dtype=np.uint64)[:, None] * np.uint64(n)) + np.arange(n, dtype=np.uint64)[None, :]
    g = seeds.keyed_normals(seed, seeds.TAG_PURE, ids.ravel()).reshape(n, n)
    scale = beta / math.sqrt(n)
    terms = {}
    for i in range(n):
        for j in range(i + 1, n):
            terms[(i, j)] = scale * (g[i, j] + g[j, i])
    # diagonal multi-indices collapse to the dropped constant
    return Polynomial(n, min(2, n), terms)


def gen_pure_p_spin(n: int, beta: float, t: int, seed: int, budget: int = PURE_SPIN_BUDGET) -> Polynomial:
    """Pure t-spin model; exact multi-index collection, constant dropped."""
    if n < 1 or t < 1:
        raise ConfigError("pure spin model requires n >= 1 and t >= 1")
    if beta < 0:
        raise ConfigError("beta must be nonnegative")
    total = n**t
    if total > budget:
        raise BudgetError(f"n^t = {total} multi-indices exceeds budget {budget}")
    if t == 1:
        g = seeds.keyed_normals(seed, seeds.TAG_PURE, np.arange(n, dtype=np.uint64))
        return Polynomial(n, 1, {(i,): beta * g[i] for i in range(n)})
    if t == 2:
        return _pure_two_spin(n, beta, seed)
    t_cap = min(t, n)  # collapsed monomials cannot exceed n variables
    scale = beta / float(n) ** ((t - 1) / 2.0)
    acc: dict[tuple[int, ...], float] = {}
    chunk = 1 << 18
    for start in range(0, total, chunk):
        ids = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        g = seeds.keyed_normals(seed, seeds.TAG_PURE, ids)
        digits = np.empty((len(ids), t), dtype=np.int64)
        rem = ids.astype(np.int64)
        for k in range(t):
            digits[:, k] = rem % n
            rem //= n
        for row, val in zip(digits, g):
            counts = Counter(row.tolist())
            mono = tuple(sorted(i for i, c in counts.items() if c % 2 == 1))
            if mono:
                acc[mono] = acc.get(mono, 0.0) + val
    return Polynomial(n, t_cap, {m: scale * v for m, v in acc.items() if scale * v != 0.0})


@dataclass(frozen=True)
class EnsembleSpec:
    """Everything needed to rebuild a model bit-for-bit."""

    kind: str
    beta: float
    seed: int
    n: int = 0
    t: int = 2
    weight_dist: str = "gaussian"
    field_mode: str = "zero"
    field_mean: float = 0.0
    field_sigma: float = 1.0
    graph: Graph | None = None

    def __post_init__(self):
        if isinstance(self.graph, str):
            object.__setattr__(self, "graph", parse_graph_spec(self.graph))
        if self.kind not in KINDS:
            raise ConfigError(f"unknown ensemble kind {self.kind!r}")
        if self.beta < 0:
            raise ConfigError("beta must be nonnegative")
        if self.weight_dist not in WEIGHT_DISTS:
            raise ConfigError(f"unknown weight distribution {self.weight_dist!r}")
        if self.field_mode not in FIELD_MODES:
            raise ConfigError(f"unknown field mode {self.field_mode!r}")
        if self.kind in ("random_ising", "random_mrf"):
            if self.graph is None:
                raise ConfigError(f"{self.kind} requires a graph")
        elif self.n < 1:
            raise ConfigError(f"{self.kind} requires n >= 1")
        if self.kind in ("sk", "random_ising") and self.t != 2:
            raise ConfigError(f"{self.kind} is pairwise; t must be 2")
        if self.kind == "random_mrf" and self.t < 1:
            raise ConfigError("random_mrf requires t >= 1")
        if self.kind == "pure_spin" and self.field_mode != "zero":
            raise ConfigError("pure spin models have no field")

    @property
    def num_vars(self) -> int:
        return self.graph.n if self.graph is not None else self.n

    @property
    def degree(self) -> int:
        """Max degree of the interaction graph (n-1 for complete families)."""
        if self.graph is not None:
            return self.graph.max_degree
        return self.num_vars - 1

    def build(self):
        if self.kind == "sk":
            return gen_sk(self.n, self.beta, self.seed, self.field_mode, self.field_mean, self.field_sigma)
        if self.kind == "random_ising":
            return gen_random_ising(
                self.graph, self.beta, self.seed, self.weight_dist,
                self.field_mode, self.field_mean, self.field_sigma,
            )
        if self.kind == "random_mrf":
            return gen_random_mrf(self.graph, self.beta, self.t, self.seed, self.weight_dist)
        return gen_pure_p_spin(self.n, self.beta, self.t, self.seed)

    def with_seed(self, seed: int) -> EnsembleSpec:
        return replace(self, seed=seed)

    def interaction_graph(self) -> Graph:
        return self.graph if self.graph is not None else complete_graph(self.num_vars)

    def meta(self) -> dict:
        """Provenance dict carried in sample batches for auto-bounds."""
        return {
            "kind": self.kind,
            "beta": self.beta,
            "t": self.t,
            "n": self.num_vars,
            "d": self.degree,
            "weight_dist": self.weight_dist,
            "field_mode": self.field_mode,
            "field_mean": self.field_mean,
            "field_sigma": self.field_sigma,
            "seed": self.seed,
        }

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["graph"] = self.graph.to_json_dict() if self.graph is not None else None
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> EnsembleSpec:
        d = dict(d)
        graph = d.get("graph")
        if isinstance(graph, str):
            d["graph"] = parse_graph_spec(graph)
        elif graph is not None:
            d["graph"] = Graph.from_json_dict(graph)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"malformed ensemble spec: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def gen_model(spec: EnsembleSpec):
    return spec.build()
