import itertools

import numpy as np
import pytest

from spinlearn.poly import Polynomial


def all_configs(n: int) -> np.ndarray:
    """All 2^n rows of {-1,+1}^n, lexicographic in (+1 first per coordinate)."""
    return np.array(list(itertools.product([1, -1], repeat=n)), dtype=np.int8)


def naive_eval(p: Polynomial, x) -> float:
    total = 0.0
    for mono, c in p.terms.items():
        v = c
        for i in mono:
            v *= x[i]
        total += v
    return total


def random_poly(rng: np.random.Generator, n: int, t_max: int, n_terms: int) -> Polynomial:
    # bounded draw count: small n may not have n_terms distinct monomials
    terms = {}
    for _ in range(8 * n_terms):
        if len(terms) >= n_terms:
            break
        k = int(rng.integers(0, t_max + 1))
        mono = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        terms[mono] = float(rng.normal())
    return Polynomial(n, t_max, terms)


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
