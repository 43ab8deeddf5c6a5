"""Sparse multilinear polynomials over the hypercube {-1,+1}^n.

A monomial is a tuple of strictly increasing variable indices; ``()`` is
the constant term.  ``Polynomial`` stores only nonzero coefficients, so
the monomial character chi_S(x) = prod_{i in S} x_i never needs x_i^2
reduction: inputs are +/-1 configurations and every stored monomial is
already multilinear.

Conventions used throughout the package:

* ``partial(i)`` is the quotient-style derivative: the coefficient of
  ``S \\ {i}`` in dp/dx_i is the coefficient of ``S`` in p, for every
  stored ``S`` containing i.  Hence p(x) = x_i * partial(i)(x) +
  without_variable(i)(x) identically.
* ``flip(S)`` is the flip polynomial p(x) - p(x^S), where x^S negates
  the coordinates in S.  Its coefficient on T is 2*p_hat(T) when
  |T & S| is odd and 0 otherwise.
* an Ising pair (A, h) maps to the polynomial with coefficient A[i][j]
  on {i, j} (i < j) and h[i] on {i}; the matrix stores each coupling in
  both triangle slots, the polynomial stores it once.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from itertools import combinations
from types import MappingProxyType

import numpy as np

from .errors import ConfigError, DimensionError

Monomial = tuple[int, ...]


def as_monomial(indices, n: int, t_max: int | None = None) -> Monomial:
    """Validate and normalize a monomial index tuple.

    Indices must be integers in [0, n), strictly increasing.  Raises
    ConfigError on malformed input, DimensionError on out-of-range
    indices or a monomial larger than t_max.
    """
    mono = tuple(int(i) for i in indices)
    if any(a >= b for a, b in zip(mono, mono[1:])):
        raise ConfigError(f"monomial indices must be strictly increasing: {mono}")
    if mono and (mono[0] < 0 or mono[-1] >= n):
        raise DimensionError(f"monomial {mono} out of range for n={n}")
    if t_max is not None and len(mono) > t_max:
        raise DimensionError(f"monomial {mono} exceeds degree bound t_max={t_max}")
    return mono


class Polynomial:
    """Immutable sparse multilinear polynomial on n +/-1 variables."""

    __slots__ = ("n", "t_max", "_terms")

    def __init__(self, n: int, t_max: int, terms=()):
        if n < 0:
            raise ConfigError("n must be nonnegative")
        if t_max < 0 or t_max > n:
            raise ConfigError(f"t_max must lie in [0, n], got {t_max} for n={n}")
        self.n = int(n)
        self.t_max = int(t_max)
        items = terms.items() if hasattr(terms, "items") else terms
        store: dict[Monomial, float] = {}
        for indices, coef in items:
            mono = as_monomial(indices, n, t_max)
            c = float(coef)
            if not math.isfinite(c):
                raise ConfigError(f"non-finite coefficient on {mono}")
            if mono in store:
                raise ConfigError(f"duplicate monomial {mono}")
            if c != 0.0:
                store[mono] = c
        self._terms = store

    # -- basic accessors -------------------------------------------------

    @property
    def terms(self):
        """Read-only view of the nonzero {monomial: coefficient} map."""
        return MappingProxyType(self._terms)

    def coefficient(self, indices) -> float:
        return self._terms.get(as_monomial(indices, self.n), 0.0)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        return f"Polynomial(n={self.n}, t_max={self.t_max}, terms={len(self._terms)})"

    # -- evaluation ------------------------------------------------------

    def _check_config(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim != 1 or x.shape[0] != self.n:
            raise DimensionError(f"configuration has shape {x.shape}, expected ({self.n},)")
        return x

    def evaluate(self, x) -> float:
        """Value of the polynomial at a single +/-1 configuration."""
        x = self._check_config(x)
        total = 0.0
        for mono, c in self._terms.items():
            v = c
            for i in mono:
                v *= x[i]
            total += v
        return float(total)

    def evaluate_batch(self, X) -> np.ndarray:
        """Values at each row of an (N, n) array of configurations."""
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise DimensionError(f"batch has shape {X.shape}, expected (N, {self.n})")
        out = np.zeros(X.shape[0], dtype=np.float64)
        for mono, c in self._terms.items():
            if mono:
                prod = X[:, mono[0]].astype(np.float64)
                for i in mono[1:]:
                    prod = prod * X[:, i]
                out += c * prod
            else:
                out += c
        return out

    # -- derived polynomials ----------------------------------------------

    def partial(self, i: int) -> Polynomial:
        """Quotient-style partial derivative with respect to x_i."""
        if not 0 <= i < self.n:
            raise DimensionError(f"variable {i} out of range for n={self.n}")
        terms = {}
        for mono, c in self._terms.items():
            if i in mono:
                terms[tuple(j for j in mono if j != i)] = c
        return Polynomial(self.n, max(self.t_max - 1, 0), terms)

    def partial_set(self, S) -> Polynomial:
        """Iterated partial derivative with respect to every index in S."""
        S = as_monomial(sorted(set(S)), self.n)
        sset = set(S)
        terms = {}
        for mono, c in self._terms.items():
            if sset.issubset(mono):
                terms[tuple(j for j in mono if j not in sset)] = c
        return Polynomial(self.n, max(self.t_max - len(S), 0), terms)

    def flip(self, S) -> Polynomial:
        """Flip polynomial p(x) - p(x^S) with the coordinates in S negated."""
        S = tuple(sorted(set(int(i) for i in S)))
        if S and (S[0] < 0 or S[-1] >= self.n):
            raise DimensionError(f"flip set {S} out of range for n={self.n}")
        sset = set(S)
        terms = {}
        for mono, c in self._terms.items():
            if len(sset.intersection(mono)) % 2 == 1:
                terms[mono] = 2.0 * c
        return Polynomial(self.n, self.t_max, terms)

    def without_variable(self, i: int) -> Polynomial:
        """The part of p whose monomials do not contain x_i."""
        if not 0 <= i < self.n:
            raise DimensionError(f"variable {i} out of range for n={self.n}")
        return Polynomial(
            self.n, self.t_max, {m: c for m, c in self._terms.items() if i not in m}
        )

    def maximal_monomials(self) -> set[Monomial]:
        """Stored monomials with no stored strict superset."""
        monos = list(self._terms)
        out = set()
        for m in monos:
            ms = set(m)
            if not any(len(o) > len(m) and ms.issubset(o) for o in monos):
                out.add(m)
        return out

    # -- norms -------------------------------------------------------------

    def l1(self) -> float:
        return float(sum(abs(c) for c in self._terms.values()))

    def linf(self) -> float:
        return float(max((abs(c) for c in self._terms.values()), default=0.0))

    def width(self) -> float:
        """max_i ||partial(i)||_1, the influence width of the polynomial."""
        acc = np.zeros(self.n, dtype=np.float64)
        for mono, c in self._terms.items():
            for i in mono:
                acc[i] += abs(c)
        return float(acc.max()) if self.n else 0.0

    # -- arithmetic ---------------------------------------------------------

    def _merge(self, other: Polynomial, sign: float) -> Polynomial:
        if self.n != other.n:
            raise DimensionError(f"variable counts differ: {self.n} vs {other.n}")
        terms = dict(self._terms)
        for mono, c in other._terms.items():
            terms[mono] = terms.get(mono, 0.0) + sign * c
        return Polynomial(self.n, max(self.t_max, other.t_max), terms)

    def __add__(self, other: Polynomial) -> Polynomial:
        return self._merge(other, 1.0)

    def __sub__(self, other: Polynomial) -> Polynomial:
        return self._merge(other, -1.0)

    def __mul__(self, scalar: float) -> Polynomial:
        s = float(scalar)
        return Polynomial(self.n, self.t_max, {m: s * c for m, c in self._terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> Polynomial:
        return self * -1.0

    def with_t_max(self, t_max: int) -> Polynomial:
        """Same terms under a different degree cap (must still fit)."""
        return Polynomial(self.n, t_max, dict(self._terms))

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        terms = [
            {"indices": list(mono), "coef": c}
            for mono, c in sorted(self._terms.items())
        ]
        return {"n": self.n, "t_max": self.t_max, "terms": terms}

    @classmethod
    def from_json_dict(cls, d: dict) -> Polynomial:
        try:
            terms = [(tuple(t["indices"]), t["coef"]) for t in d["terms"]]
            return cls(int(d["n"]), int(d["t_max"]), terms)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed polynomial JSON: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    def model_hash(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]


class IsingModel:
    """Pairwise model: symmetric zero-diagonal couplings A and field h."""

    __slots__ = ("n", "A", "h")

    def __init__(self, n: int, A, h):
        A = np.array(A, dtype=np.float64).reshape(n, n)
        h = np.array(h, dtype=np.float64).reshape(n)
        if not np.allclose(A, A.T, atol=0.0):
            raise ConfigError("coupling matrix must be exactly symmetric")
        if np.any(np.diag(A) != 0.0):
            raise ConfigError("coupling matrix must have zero diagonal")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(h))):
            raise ConfigError("couplings and field must be finite")
        self.n = int(n)
        self.A = A
        self.h = h

    def __eq__(self, other) -> bool:
        if not isinstance(other, IsingModel):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.h, other.h)
        )

    def __repr__(self) -> str:
        return f"IsingModel(n={self.n})"

    def to_json_dict(self) -> dict:
        return {"n": self.n, "A": [float(v) for v in self.A.ravel()], "h": [float(v) for v in self.h]}

    @classmethod
    def from_json_dict(cls, d: dict) -> IsingModel:
        try:
            n = int(d["n"])
            return cls(n, np.asarray(d["A"], dtype=np.float64).reshape(n, n), d["h"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed Ising JSON: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    def model_hash(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]


# -- module-level operation wrappers ------------------------------------------


def eval_poly(p: Polynomial, x) -> float:
    return p.evaluate(x)


def partial_derivative(p: Polynomial, i: int) -> Polynomial:
    return p.partial(i)


def flip_polynomial(p: Polynomial, S) -> Polynomial:
    return p.flip(S)


def maximal_monomials(p: Polynomial) -> set[Monomial]:
    return p.maximal_monomials()


def l1_norm(p: Polynomial) -> float:
    return p.l1()


def width(p: Polynomial) -> float:
    return p.width()


def l1_distance(p: Polynomial, q: Polynomial) -> float:
    """l1 norm of the coefficient difference; n and t_max must match."""
    if p.n != q.n or p.t_max != q.t_max:
        raise DimensionError(
            f"polynomials disagree on (n, t_max): ({p.n},{p.t_max}) vs ({q.n},{q.t_max})"
        )
    return (p - q).l1()


def linf_distance(p: Polynomial, q: Polynomial) -> float:
    """Largest absolute coefficient difference over the union of monomials."""
    if p.n != q.n:
        raise DimensionError(f"variable counts differ: {p.n} vs {q.n}")
    return (p - q).linf()


def ising_to_poly(model: IsingModel) -> Polynomial:
    """Degree-2 polynomial with coefficient A[i][j] on {i,j} and h[i] on {i}."""
    terms = {}
    for i in range(model.n):
        if model.h[i] != 0.0:
            terms[(i,)] = float(model.h[i])
        for j in range(i + 1, model.n):
            if model.A[i, j] != 0.0:
                terms[(i, j)] = float(model.A[i, j])
    return Polynomial(model.n, min(2, model.n), terms)


def poly_to_ising(p: Polynomial) -> IsingModel:
    """Inverse of ising_to_poly; drops a constant term with a warning."""
    A = np.zeros((p.n, p.n), dtype=np.float64)
    h = np.zeros(p.n, dtype=np.float64)
    for mono, c in p.terms.items():
        if len(mono) == 0:
            warnings.warn("dropping constant term in conversion to Ising form")
        elif len(mono) == 1:
            h[mono[0]] = c
        elif len(mono) == 2:
            A[mono[0], mono[1]] = c
            A[mono[1], mono[0]] = c
        else:
            raise ConfigError(f"degree-{len(mono)} term {mono} has no Ising form")
    return IsingModel(p.n, A, h)


def _sign(v: float) -> float:
    return 1.0 if v >= 0.0 else -1.0


def find_boost_witness(p: Polynomial, S, x) -> np.ndarray:
    """A configuration y with d_H(x, y) <= |S| and |p(y)| >= |p_hat(S)|.

    S must be maximal in p (no stored monomial strictly contains it).
    Built by the inductive sign-choice argument: peel the smallest index
    i of S, find a witness z for S \\ {i} in dp/dx_i, then set y_i so
    that y_i * (dp/dx_i)(z) and the i-free part of p at z share a sign.
    """
    S = as_monomial(sorted(set(S)), p.n)
    sset = set(S)
    for mono in p.terms:
        if len(mono) > len(S) and sset.issubset(mono):
            raise ConfigError(f"{S} is not maximal: {mono} is a stored strict superset")
    x = np.asarray(x)
    if x.shape != (p.n,):
        raise DimensionError(f"configuration has shape {x.shape}, expected ({p.n},)")
    if not np.all(np.abs(x) == 1):
        raise ConfigError("witness search requires a +/-1 configuration")
    y = np.array(x, dtype=np.int8)

    def build(q: Polynomial, rest: Monomial) -> None:
        if not rest:
            return
        i = rest[0]
        di = q.partial(i)
        build(di, rest[1:])
        y[i] = int(_sign(di.evaluate(y)) * _sign(q.without_variable(i).evaluate(y)))

    build(p, S)
    return y
