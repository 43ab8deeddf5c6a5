"""Polynomial algebra: evaluation, derivatives, flips, witnesses, serialization."""

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinlearn.errors import ConfigError, DimensionError
from spinlearn.poly import (IsingModel, Polynomial, as_monomial, eval_poly,
                            find_boost_witness, flip_polynomial, ising_to_poly,
                            l1_distance, l1_norm, linf_distance,
                            maximal_monomials, partial_derivative,
                            poly_to_ising, width)

from conftest import all_configs, naive_eval, random_poly


def test_eval_zero_poly():
    p = Polynomial(4, 2, {})
    assert eval_poly(p, [1, 1, -1, 1]) == 0.0


def test_eval_two_terms():
    # x0*x1 + x2 at (1,-1,1): -1 + 1
    p = Polynomial(3, 2, {(0, 1): 1.0, (2,): 1.0})
    assert eval_poly(p, (1, -1, 1)) == 0.0


def test_eval_matches_naive_exhaustive(rng):
    p = random_poly(rng, 8, 3, 12)
    for x in all_configs(8):
        assert eval_poly(p, x) == pytest.approx(naive_eval(p, x), abs=1e-12)


def test_eval_dimension_mismatch():
    p = Polynomial(3, 1, {(0,): 1.0})
    with pytest.raises(DimensionError):
        eval_poly(p, [1, -1])


def test_partial_simple():
    p = Polynomial(3, 2, {(0, 1): 1.0, (2,): 1.0})
    d0 = partial_derivative(p, 0)
    assert dict(d0.terms) == {(1,): 1.0}


def test_partial_triple():
    p = Polynomial(3, 3, {(0, 1, 2): 1.0})
    assert dict(partial_derivative(p, 1).terms) == {(0, 2): 1.0}


def test_partial_absent_variable():
    p = Polynomial(3, 2, {(1, 2): 0.5})
    assert len(partial_derivative(p, 0)) == 0


def test_partial_out_of_range():
    p = Polynomial(3, 2, {(1, 2): 0.5})
    with pytest.raises(DimensionError):
        partial_derivative(p, 3)


def test_partial_decomposition_identity(rng):
    # p(x) = x_i * dp_i(x) + p_without_i(x) for every x
    p = random_poly(rng, 6, 3, 10)
    for i in range(6):
        di = p.partial(i)
        rest = p.without_variable(i)
        for x in all_configs(6):
            assert eval_poly(p, x) == pytest.approx(
                x[i] * eval_poly(di, x) + eval_poly(rest, x), abs=1e-12)


def test_flip_single_set():
    p = Polynomial(3, 2, {(0, 1): 1.0, (2,): 1.0})
    f = flip_polynomial(p, (0,))
    assert dict(f.terms) == {(0, 1): 2.0}


def test_flip_two_sets():
    p = Polynomial(3, 2, {(0, 1): 1.0, (2,): 1.0})
    f = flip_polynomial(p, (0, 2))
    assert dict(f.terms) == {(0, 1): 2.0, (2,): 2.0}


def test_flip_identity_exhaustive(rng):
    # psi^S(x) == psi(x) - psi(x with coords in S negated), all x, |S| <= 3
    p = random_poly(rng, 6, 3, 10)
    X = all_configs(6)
    for size in range(1, 4):
        for S in itertools.combinations(range(6), size):
            f = flip_polynomial(p, S)
            for x in X:
                y = x.copy()
                y[list(S)] *= -1
                assert eval_poly(f, x) == pytest.approx(
                    eval_poly(p, x) - eval_poly(p, y), abs=1e-12)


def test_flip_singleton_is_twice_partial(rng):
    # psi^{i}(x) = 2 x_i (d_i psi)(x)
    p = random_poly(rng, 6, 3, 10)
    for i in range(6):
        f = flip_polynomial(p, (i,))
        di = p.partial(i)
        for x in all_configs(6):
            assert eval_poly(f, x) == pytest.approx(
                2.0 * x[i] * eval_poly(di, x), abs=1e-12)


def test_maximal_monomials_cases():
    p = Polynomial(3, 2, {(0, 1): 1.0, (0,): 1.0})
    assert maximal_monomials(p) == {(0, 1)}
    q = Polynomial(3, 1, {(0,): 1.0, (1,): 1.0})
    assert maximal_monomials(q) == {(0,), (1,)}
    r = Polynomial(3, 2, {(0, 1): 1.0, (2,): 1.0})
    assert maximal_monomials(r) == {(0, 1), (2,)}


def test_boost_witness_single_variable():
    p = Polynomial(2, 1, {(0,): 1.0})
    for x in all_configs(2):
        y = find_boost_witness(p, (0,), x)
        assert abs(eval_poly(p, y)) >= 1.0
        assert int((y != x).sum()) <= 1


def test_boost_witness_constant():
    p = Polynomial(2, 0, {(): 0.7})
    x = np.array([1, -1], dtype=np.int8)
    y = find_boost_witness(p, (), x)
    assert np.array_equal(y, x)
    assert abs(eval_poly(p, y)) >= 0.7


def test_boost_witness_vs_ball_oracle():
    # every y within Hamming distance |S| is searched; ours must be one of the good ones
    p = Polynomial(2, 2, {(0, 1): 1.0, (0,): 0.5})
    S = (0, 1)
    target = abs(p.coefficient(S))
    for x in all_configs(2):
        y = find_boost_witness(p, S, x)
        dist = int((y != x).sum())
        assert dist <= len(S)
        assert abs(eval_poly(p, y)) >= target
        # oracle: some point in the ball achieves the bound
        ball = [z for z in all_configs(2) if (z != x).sum() <= len(S)]
        assert any(abs(eval_poly(p, z)) >= target for z in ball)


def test_boost_witness_rejects_non_maximal():
    p = Polynomial(3, 2, {(0, 1): 1.0, (0,): 0.5})
    with pytest.raises(ConfigError):
        find_boost_witness(p, (0,), np.ones(3, dtype=np.int8))


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_boost_witness_postconditions_property(data):
    n = data.draw(st.integers(2, 6), label="n")
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1), label="seed"))
    p = random_poly(rng, n, min(3, n), data.draw(st.integers(1, 8), label="terms"))
    if not p.terms:
        return
    S = data.draw(st.sampled_from(sorted(p.maximal_monomials())), label="S")
    x = np.array(data.draw(st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n)),
                 dtype=np.int8)
    y = find_boost_witness(p, S, x)
    assert int((y != x).sum()) <= len(S)
    assert abs(eval_poly(p, y)) >= abs(p.coefficient(S)) - 1e-12


def test_norms_and_width():
    A = np.array([[0.0, 1.0, -2.0], [1.0, 0.0, 0.5], [-2.0, 0.5, 0.0]])
    h = np.array([0.3, 0.0, -1.0])
    m = IsingModel(3, A, h)
    p = ising_to_poly(m)
    expected = max(np.abs(A[i]).sum() + abs(h[i]) for i in range(3))
    assert width(p) == pytest.approx(expected)
    assert l1_distance(p, p) == 0.0


def test_l1_distance_naive_oracle(rng):
    p = random_poly(rng, 6, 2, 8)
    q = random_poly(rng, 6, 2, 8)
    monos = set(p.terms) | set(q.terms)
    naive = sum(abs(p.coefficient(m) - q.coefficient(m)) for m in monos)
    assert l1_distance(p, q) == pytest.approx(naive, abs=1e-12)
    naive_inf = max(abs(p.coefficient(m) - q.coefficient(m)) for m in monos)
    assert linf_distance(p, q) == pytest.approx(naive_inf, abs=1e-12)


def test_l1_distance_requires_matching_shape():
    p = Polynomial(3, 2, {(0,): 1.0})
    with pytest.raises(DimensionError):
        l1_distance(p, Polynomial(4, 2, {(0,): 1.0}))
    with pytest.raises(DimensionError):
        l1_distance(p, Polynomial(3, 3, {(0,): 1.0}))


def test_ising_poly_round_trip(rng):
    zero = IsingModel(3, np.zeros((3, 3)), np.zeros(3))
    assert len(ising_to_poly(zero)) == 0

    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = 0.7
    m = IsingModel(3, A, np.zeros(3))
    assert ising_to_poly(m).coefficient((0, 1)) == 0.7

    G = rng.normal(size=(8, 8))
    A = (G + G.T) / 2
    np.fill_diagonal(A, 0.0)
    h = rng.normal(size=8)
    m = IsingModel(8, A, h)
    back = poly_to_ising(ising_to_poly(m))
    assert np.array_equal(back.A, m.A) and np.array_equal(back.h, m.h)


def test_poly_to_ising_drops_constant_with_warning():
    p = Polynomial(2, 2, {(): 3.0, (0, 1): 1.0})
    with pytest.warns(UserWarning):
        m = poly_to_ising(p)
    assert m.A[0, 1] == 1.0


def test_poly_to_ising_rejects_degree_3():
    p = Polynomial(3, 3, {(0, 1, 2): 1.0})
    with pytest.raises(ConfigError):
        poly_to_ising(p)


def test_ising_model_validation():
    A = np.zeros((2, 2))
    A[0, 1] = 1.0  # asymmetric
    with pytest.raises(ConfigError):
        IsingModel(2, A, np.zeros(2))
    B = np.eye(2)
    with pytest.raises(ConfigError):
        IsingModel(2, B, np.zeros(2))


def test_canonical_sparsity():
    p = Polynomial(3, 2, {(0,): 1.0})
    q = p + Polynomial(3, 2, {(1, 2): 0.5}) - Polynomial(3, 2, {(1, 2): 0.5})
    assert q == p
    assert (1, 2) not in q.terms


def test_zero_coefficients_never_stored():
    p = Polynomial(3, 2, {(0,): 1.0, (1,): 0.0})
    assert (1,) not in p.terms


def test_monomial_validation():
    with pytest.raises(ConfigError):
        as_monomial((1, 1), 3)
    with pytest.raises(ConfigError):
        as_monomial((2, 1), 3)
    with pytest.raises(DimensionError):
        as_monomial((0, 5), 3)
    with pytest.raises(DimensionError):
        Polynomial(3, 1, {(0, 1): 1.0})  # degree over t_max


def test_json_round_trip_and_determinism(rng):
    p = random_poly(rng, 6, 3, 9)
    d = p.to_json_dict()
    assert Polynomial.from_json_dict(d) == p
    # terms serialized sorted lexicographically
    keys = [tuple(t["indices"]) for t in d["terms"]]
    assert keys == sorted(keys)
    assert json.loads(p.dumps()) == d

    m = IsingModel(3, np.zeros((3, 3)), np.arange(3.0))
    m2 = IsingModel.from_json_dict(m.to_json_dict())
    assert np.array_equal(m2.h, m.h)


def test_equality_and_hash(rng):
    p = random_poly(rng, 5, 2, 6)
    q = Polynomial(5, 2, dict(p.terms))
    assert p == q and hash(p) == hash(q)
    assert p != q * 1.5


def test_evaluate_batch_matches_scalar(rng):
    p = random_poly(rng, 6, 3, 10)
    X = all_configs(6)
    vals = p.evaluate_batch(X)
    for x, v in zip(X, vals):
        assert v == pytest.approx(eval_poly(p, x), abs=1e-12)


def test_width_of_zero_and_constant():
    assert width(Polynomial(3, 2, {})) == 0.0
    assert width(Polynomial(3, 2, {(): 5.0})) == 0.0
    assert l1_norm(Polynomial(3, 2, {(): 5.0, (0,): -2.0})) == 7.0


def test_model_hash_stable(rng):
    p = random_poly(rng, 5, 2, 6)
    assert p.model_hash() == Polynomial(5, 2, dict(p.terms)).model_hash()
    assert p.model_hash() != (p * 2.0).model_hash()
