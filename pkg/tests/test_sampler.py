"""Exact enumeration, inverse-CDF sampling, Glauber dynamics."""

import math

import numpy as np
import pytest
from scipy.special import expit

from spinlearn.errors import BudgetError, ConfigError
from spinlearn.generate import EnsembleSpec
from spinlearn.graphs import complete_graph
from spinlearn.poly import Polynomial, ising_to_poly
from spinlearn.sampler import (ENUM_CAP, SampleBatch, all_state_energies,
                               conditional_prob, config_to_state,
                               enumerate_distribution, exact_sample,
                               glauber_chain, glauber_transition_matrix,
                               load_batch, sample_batch_from_model, save_batch,
                               state_to_configs)

from conftest import all_configs, random_poly


def states_of(X: np.ndarray) -> np.ndarray:
    bits = ((1 - X.astype(np.int64)) // 2)
    return bits @ (1 << np.arange(X.shape[1], dtype=np.int64))


def empirical_tv(X: np.ndarray, probs: np.ndarray) -> float:
    counts = np.bincount(states_of(X), minlength=probs.size)
    return 0.5 * np.abs(counts / X.shape[0] - probs).sum()


def test_enumerate_uniform():
    tab = enumerate_distribution(Polynomial(3, 2, {}))
    assert np.allclose(tab.probs, 1.0 / 8)
    assert tab.logz == pytest.approx(math.log(8))


def test_enumerate_single_spin_marginal():
    h = 0.8
    tab = enumerate_distribution(Polynomial(1, 1, {(0,): h}))
    # state 0 encodes x_0 = +1
    assert tab.probs[0] == pytest.approx(expit(2 * h))


def test_enumerate_two_spin_value():
    p = Polynomial(2, 2, {(0, 1): 0.5})
    tab = enumerate_distribution(p)
    want = math.exp(0.5) / (2 * math.exp(0.5) + 2 * math.exp(-0.5))
    assert tab.probs[0] == pytest.approx(want, abs=1e-10)
    assert tab.probs[0] == pytest.approx(0.3655, abs=5e-5)


def test_enumerate_cap():
    with pytest.raises(BudgetError):
        enumerate_distribution(Polynomial(25, 1, {}), cap=24)
    # force flag lifts it (tiny n here, just the flag path)
    enumerate_distribution(Polynomial(4, 1, {}), cap=3, force=True)


def test_state_config_round_trip():
    X = state_to_configs(np.arange(16), 4)
    assert np.all(np.abs(X) == 1)
    for s, x in enumerate(X):
        assert config_to_state(x) == s


def test_exact_sample_uniform_means():
    p = Polynomial(6, 2, {})
    b = exact_sample(p, 1_000_000, seed=5)
    assert np.abs(b.data.mean(axis=0)).max() <= 0.005


def test_exact_sample_deterministic():
    p = Polynomial(4, 2, {(0, 1): 0.3})
    a = exact_sample(p, 2000, seed=9)
    b = exact_sample(p, 2000, seed=9)
    assert np.array_equal(a.data, b.data)
    assert a.meta["model_hash"] == p.model_hash()
    assert a.is_iid()


def test_exact_sample_tv_to_table():
    spec = EnsembleSpec(kind="sk", beta=1.0, seed=77, n=10)
    psi = ising_to_poly(spec.build())
    tab = enumerate_distribution(psi)
    b = exact_sample(psi, 1_000_000, seed=3)
    assert empirical_tv(b.data, tab.probs) <= 0.02


def test_conditional_prob_cases(rng):
    assert conditional_prob(Polynomial(2, 1, {}), [1, 1], 0) == 0.5
    h = -0.6
    assert conditional_prob(Polynomial(1, 1, {(0,): h}), [1], 0) == pytest.approx(expit(2 * h))

    p = random_poly(rng, 8, 3, 14)
    tab = enumerate_distribution(p)
    X = all_configs(8)
    states = states_of(X)
    for i in range(8):
        mask = 1 << i
        for x, s in zip(X, states):
            s_plus, s_minus = s & ~mask, s | mask
            ratio = tab.probs[s_plus] / (tab.probs[s_plus] + tab.probs[s_minus])
            assert conditional_prob(p, x, i) == pytest.approx(ratio, abs=1e-10)


def test_glauber_single_spin_stationary():
    h = 0.7
    p = Polynomial(1, 1, {(0,): h})
    b = glauber_chain(p, 100_000, seed=11, burn_in=100, thinning=1)
    assert not b.is_iid()
    frac = (b.data[:, 0] == 1).mean()
    assert frac == pytest.approx(expit(2 * h), abs=0.01)


def test_glauber_zero_model_means():
    p = Polynomial(5, 2, {})
    # thinning=5 so successive rows are nearly independent per coordinate
    b = glauber_chain(p, 100_000, seed=2, burn_in=50, thinning=5)
    assert np.abs(b.data.mean(axis=0)).max() <= 0.02


def test_glauber_deterministic():
    p = Polynomial(4, 2, {(0, 1): 0.5, (2,): -0.3})
    a = glauber_chain(p, 500, seed=8, burn_in=10, thinning=2)
    b = glauber_chain(p, 500, seed=8, burn_in=10, thinning=2)
    assert np.array_equal(a.data, b.data)
    assert a.meta["burn_in"] == 10 and a.meta["thinning"] == 2


def test_detailed_balance(rng):
    for s in range(3):
        p = random_poly(np.random.default_rng(s), 6, 3, 10)
        K = glauber_transition_matrix(p)
        tab = enumerate_distribution(p)
        F = tab.probs[:, None] * K
        assert np.abs(F - F.T).max() < 1e-10
        assert np.abs(K.sum(axis=1) - 1.0).max() < 1e-12
        # stationarity follows
        assert np.abs(tab.probs @ K - tab.probs).max() < 1e-12


def test_normalization_error():
    for s in range(5):
        p = random_poly(np.random.default_rng(s), 8, 3, 15)
        tab = enumerate_distribution(p)
        assert abs(tab.probs.sum() - 1.0) < 1e-9
        assert np.allclose(np.exp(tab.log_probs), tab.probs)


def test_logz_marginalization_lower_bound(rng):
    # dropping one site's terms: logZ_psi >= log(0.5 * sum_x exp(g(x)))
    p = random_poly(rng, 6, 3, 12)
    tab = enumerate_distribution(p)
    for i in range(6):
        g = p.without_variable(i)
        eg = all_state_energies(g)
        m = eg.max()
        log_half_sum = math.log(0.5) + m + math.log(np.exp(eg - m).sum())
        assert tab.logz >= log_half_sum - 1e-9


def test_large_energy_stability():
    # beta*sqrt(n)-scale energies must not overflow the table
    p = Polynomial(2, 2, {(0, 1): 400.0})
    tab = enumerate_distribution(p)
    assert np.isfinite(tab.logz)
    assert tab.probs[0] + tab.probs[3] == pytest.approx(1.0)


def test_save_load_round_trip(tmp_path):
    p = Polynomial(4, 2, {(0, 1): 0.3})
    b = exact_sample(p, 100, seed=1, extra_meta={"note": "x"})
    path = tmp_path / "batch.csv"
    save_batch(b, path, header_note="hello")
    b2 = load_batch(path)
    assert np.array_equal(b2.data, b.data)
    assert b2.meta == b.meta
    assert (tmp_path / "batch.meta.json").exists()


def test_sample_batch_dispatch_and_width_meta():
    spec = EnsembleSpec(kind="sk", beta=0.5, seed=4, n=5)
    psi = ising_to_poly(spec.build())
    b = sample_batch_from_model(spec.meta(), psi, "exact", 50, seed=2)
    info = b.meta["ensemble"]
    assert info["kind"] == "sk" and info["width"] == pytest.approx(psi.width())
    g = sample_batch_from_model(spec.meta(), psi, "glauber", 50, seed=2, burn_in=10)
    assert not g.is_iid()
    with pytest.raises(ConfigError):
        sample_batch_from_model(spec.meta(), psi, "metropolis", 50, seed=2)


def test_batch_validation():
    with pytest.raises(ConfigError):
        SampleBatch(np.array([[1, 2]]), {})
    with pytest.raises(Exception):
        SampleBatch(np.ones(4), {})
