"""Flip polynomials, smoothness events, MGF bounds, divergences."""

import math
from itertools import combinations

import numpy as np
import pytest

from spinlearn.diagnostics import (anticoncentration_fraction, flip_sets_up_to,
                                   flip_values_batch, flip_values_exact,
                                   identifiability_margin, kl_divergence,
                                   membership_in_E, mgf_flip_estimate,
                                   smoothness_fraction, tail_fraction,
                                   tv_distance)
from spinlearn.errors import BudgetError, ConfigError, DimensionError
from spinlearn.generate import EnsembleSpec, mrf_coeff_scale
from spinlearn.poly import Polynomial, ising_to_poly
from spinlearn.sampler import (enumerate_distribution, exact_sample,
                               state_to_configs)

from conftest import all_configs, naive_eval, random_poly


def naive_flip(p: Polynomial, x, S) -> float:
    x = np.asarray(x)
    y = x.copy()
    y[list(S)] *= -1
    return naive_eval(p, x) - naive_eval(p, y)


def test_flip_sets_cap_and_count():
    sets = flip_sets_up_to(5, 2)
    assert len(sets) == 5 + 10
    assert sets[0] == (0,) and sets[-1] == (3, 4)
    with pytest.raises(BudgetError):
        flip_sets_up_to(30, 3, cap=100)
    with pytest.raises(ConfigError):
        flip_sets_up_to(4, 0)


def test_flip_values_against_naive(rng):
    p = random_poly(rng, 6, 3, 10)
    subsets = flip_sets_up_to(6, 3)
    # exact rows index states in table order, so feed the batch path the
    # same configurations
    X = state_to_configs(np.arange(64), 6)
    exact = flip_values_exact(p, subsets)
    batch = flip_values_batch(p, subsets, X)
    for r, S in enumerate(subsets):
        for c in range(0, 64, 7):  # spot-check a spread of states
            want = naive_flip(p, X[c], S)
            assert exact[r, c] == pytest.approx(want, abs=1e-12)
            assert batch[r, c] == pytest.approx(want, abs=1e-12)
    assert np.allclose(exact, batch, atol=1e-12)


def test_single_flip_is_twice_partial(rng):
    p = random_poly(rng, 5, 3, 8)
    X = all_configs(5)
    for i in range(5):
        vals = flip_values_batch(p, [(i,)], X)[0]
        want = 2.0 * X[:, i] * p.partial(i).evaluate_batch(X)
        assert np.allclose(vals, want, atol=1e-12)


def test_membership_examples():
    zero = Polynomial(3, 2, {})
    assert membership_in_E(zero, [1, 1, 1], 0.0, 2)
    h = 0.8
    single = Polynomial(2, 2, {(0,): h})
    # the only nonzero flip moves psi by exactly 2h
    assert membership_in_E(single, [1, 1], 2 * h, 2)
    assert not membership_in_E(single, [1, 1], 2 * h - 1e-9, 2)
    with pytest.raises(ConfigError):
        membership_in_E(zero, [1, 1, 1], -1.0, 2)


def test_membership_monotone_in_C(rng):
    p = random_poly(rng, 5, 2, 8)
    X = all_configs(5)
    for C_lo, C_hi in ((0.5, 1.0), (1.0, 3.0)):
        for x in X[::5]:
            if membership_in_E(p, x, C_lo, 2):
                assert membership_in_E(p, x, C_hi, 2)


def test_smoothness_zero_and_saturated(rng):
    zero = Polynomial(4, 2, {})
    rep = smoothness_fraction(zero, 0.0, 2)
    assert rep.fraction == 1.0 and rep.method == "exact"
    assert rep.sample_count == 16 and rep.worst_flip == 0.0

    p = random_poly(rng, 5, 3, 8)
    C = 2.0 * p.l1() + 1.0  # no flip can exceed twice the l1 norm
    rep = smoothness_fraction(p, C, 3)
    assert rep.fraction == 1.0
    assert rep.worst_flip <= C
    assert rep.max_partial_in_E is not None


def test_smoothness_montecarlo_close(rng):
    p = random_poly(rng, 6, 2, 9)
    C = 1.5
    exact = smoothness_fraction(p, C, 2).fraction
    b = exact_sample(p, 100_000, seed=12)
    rep = smoothness_fraction(p, C, 2, source=b)
    assert rep.method == "montecarlo"
    se = math.sqrt(exact * (1 - exact) / b.n_samples) + 1e-9
    assert abs(rep.fraction - exact) <= 4 * se
    assert rep.max_partial_in_E is None


def test_mgf_examples():
    zero = Polynomial(3, 2, {})
    rep = mgf_flip_estimate(zero, (0,), 8.0)
    assert rep.estimate == 1.0 and not rep.overflow

    h = 0.9
    single = Polynomial(1, 1, {(0,): h})
    rep = mgf_flip_estimate(single, (0,), 4.0)
    assert rep.estimate == pytest.approx(math.exp(4 * h * h / 4.0), rel=1e-12)

    with pytest.raises(ConfigError):
        mgf_flip_estimate(zero, (), 4.0)
    with pytest.raises(ConfigError):
        mgf_flip_estimate(zero, (0,), 0.0)


def test_mgf_overflow_flag():
    big = Polynomial(1, 1, {(0,): 100.0})
    rep = mgf_flip_estimate(big, (0,), 1.0)
    assert rep.overflow and rep.estimate == math.inf
    assert rep.log_estimate == pytest.approx(4.0 * 100.0**2)


def test_mgf_at_least_one(rng):
    for s in range(5):
        p = random_poly(np.random.default_rng(s), 5, 3, 8)
        rep = mgf_flip_estimate(p, (1, 3), 16.0)
        assert rep.estimate >= 1.0
        assert rep.log_estimate >= 0.0


def test_tail_examples():
    zero = Polynomial(2, 2, {})
    assert tail_fraction(zero, (0,), 0.0) == 0.0  # strict inequality
    h = 0.7
    single = Polynomial(2, 2, {(0,): h})
    assert tail_fraction(single, (0,), h - 1e-9) == 1.0
    assert tail_fraction(single, (0,), h) == 0.0
    # montecarlo path
    b = exact_sample(single, 5_000, seed=3)
    assert tail_fraction(single, (0,), h - 1e-9, source=b) == 1.0


def test_anticoncentration_examples():
    D = enumerate_distribution(Polynomial(2, 2, {}))
    q = Polynomial(2, 2, {(1,): 1.0})
    assert anticoncentration_fraction(D, q, (1,)) == 1.0

    q2 = Polynomial(2, 2, {(0, 1): 1.0, (): 10.0})
    assert anticoncentration_fraction(D, q2, (0, 1)) == 1.0

    q3 = Polynomial(2, 2, {(0, 1): 1.0, (0,): 1.0})
    with pytest.raises(ConfigError):
        anticoncentration_fraction(D, q3, (0,))  # strictly inside (0,1)


def test_anticoncentration_lower_bound(rng):
    # uniform law: check the generic bound Pr[|q| >= |q_S|] >= 2^-(t+1)
    for s in range(5):
        q = random_poly(np.random.default_rng(60 + s), 6, 2, 6)
        if not q.maximal_monomials():
            continue
        D = enumerate_distribution(Polynomial(6, 2, {}))
        S = max(q.maximal_monomials(), key=len)
        frac = anticoncentration_fraction(D, q, S)
        assert frac >= 2.0 ** -(2 + 1)


def test_kl_tv_examples():
    p = Polynomial(3, 2, {(0, 1): 0.4, (2,): -0.2})
    P = enumerate_distribution(p)
    assert kl_divergence(P, P) == 0.0
    assert tv_distance(P, P) == 0.0

    # strongly opposed single-spin laws: TV approaches 1
    A = enumerate_distribution(Polynomial(1, 1, {(0,): 8.0}))
    B = enumerate_distribution(Polynomial(1, 1, {(0,): -8.0}))
    assert tv_distance(A, B) >= 0.999
    assert kl_divergence(A, B) > 1.0


def test_kl_perturbation_bound(rng):
    # energies move by at most ||delta||_1 pointwise, so KL <= 2 l1
    p = random_poly(rng, 5, 2, 7)
    delta = Polynomial(5, 2, {(0, 3): 0.06, (2,): -0.04})
    q = p + delta
    P, Q = enumerate_distribution(p), enumerate_distribution(q)
    kl = kl_divergence(P, Q)
    assert kl <= 2 * delta.l1() + 1e-12
    assert tv_distance(P, Q) <= math.sqrt(kl / 2.0) + 1e-12


def test_pinsker_on_random_pairs(rng):
    for s in range(10):
        g = np.random.default_rng(90 + s)
        P = enumerate_distribution(random_poly(g, 4, 2, 5))
        Q = enumerate_distribution(random_poly(g, 4, 2, 5))
        assert tv_distance(P, Q) <= math.sqrt(kl_divergence(P, Q) / 2.0) + 1e-12


def test_identifiability_examples():
    assert identifiability_margin(Polynomial(3, 2, {})) == math.inf
    p = Polynomial(3, 2, {(0, 1): 0.5, (0,): 2.0, (2,): -0.1})
    # (0,) is inside (0,1); margin ranges over (0,1) and (2,)
    assert identifiability_margin(p) == 0.1

    spec = EnsembleSpec(kind="random_ising", beta=0.8, seed=6, n=6,
                        weight_dist="rademacher", graph="regular:6:3")
    psi = ising_to_poly(spec.build())
    assert identifiability_margin(psi) == mrf_coeff_scale(0.8, 3, 2)


def test_dimension_mismatches():
    p = Polynomial(3, 2, {})
    with pytest.raises(DimensionError):
        smoothness_fraction(p, 1.0, 2, source=enumerate_distribution(Polynomial(4, 2, {})))
    with pytest.raises(DimensionError):
        tail_fraction(p, (0,), 0.1, source=exact_sample(Polynomial(4, 2, {}), 10, seed=1))
    with pytest.raises(ConfigError):
        smoothness_fraction(p, 1.0, 2, source="nope")
