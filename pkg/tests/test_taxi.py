import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import simulate_taxi, stationary, taxi_matrix_by_hand
from queuenet.ctmc import TransientState, final_state, solve_transient
from queuenet.errors import UndefinedWaitError
from queuenet.rates import RateProfile
from queuenet.taxi import (TaxiParams, TaxiState, build_taxi_generator, taxi_pool_length, taxi_queue_length,
                           taxi_sojourn_time)


def params(lam_X=1.0, lam_T=1.0, mu=1.0, K_T=2, cap=3, horizon=(0.0, 100.0)):
    def prof(v):
        return v if isinstance(v, RateProfile) else RateProfile.constant(v, *horizon)
    return TaxiParams(prof(lam_X), prof(lam_T), mu, K_T, cap)


def test_four_state_chain():
    Q = build_taxi_generator(params(2.0, 3.0, 5.0, K_T=1, cap=1)).matrix(0.0)
    # (1,1) is index 3: only matching leaves it, arrivals are blocked at both caps
    row = Q[3]
    assert row[0] == 5.0
    assert row[1] == row[2] == 0.0
    assert row[3] == -5.0


def test_no_matching_without_passengers():
    p = params(1.0, 1.0, 4.0, K_T=3, cap=2)
    Q = build_taxi_generator(p).matrix(0.0)
    for j in range(1, 4):
        s = p.index(0, j)
        targets = {k for k in np.flatnonzero(Q[s]) if k != s}
        assert targets <= {p.index(1, j), p.index(0, j + 1) if j < 3 else -1}


def test_matrix_matches_hand_enumeration():
    Q = build_taxi_generator(params()).matrix(0.0)
    np.testing.assert_allclose(Q, taxi_matrix_by_hand(1, 1, 1, 2, 3), atol=0)


def test_stationary_matches_hand_enumeration():
    Q = build_taxi_generator(params()).matrix(0.0)
    np.testing.assert_allclose(stationary(Q), stationary(taxi_matrix_by_hand(1, 1, 1, 2, 3)), atol=1e-10)


def test_queue_length_examples():
    assert taxi_queue_length(TaxiState.point(60, 3, 5, 80)) == 60
    g = np.zeros((4, 3))
    g[0, :] = 0.5 / 3
    g[1, :] = 0.5 / 3
    assert taxi_queue_length(TaxiState(TransientState(g.ravel(), 0), 2)) == pytest.approx(0.5)


def test_sojourn_examples():
    assert taxi_sojourn_time(12, 3) == 4
    assert taxi_sojourn_time(0, 2.5) == 0
    assert taxi_sojourn_time(137, 9.13) == 137 / 9.13
    with pytest.raises(UndefinedWaitError):
        taxi_sojourn_time(5, 0)


def test_resize_keeps_distribution():
    s = TaxiState.point(3, 1, 2, 4)
    r = s.resized(10)
    assert r.passenger_cap == 10
    assert taxi_queue_length(r) == 3
    with pytest.raises(ValueError):
        s.resized(2)


def test_params_validation():
    with pytest.raises(ValueError):
        params(mu=0)
    with pytest.raises(ValueError):
        params(K_T=0)


def test_transient_mean_matches_monte_carlo():
    p = params(1.0, 1.2, 1.5, K_T=2, cap=40)
    s0 = TaxiState.point(2, 0, 2, 40)
    s = TaxiState(final_state(build_taxi_generator(p), s0.state, 3.0, 0.01), 2)
    sim = simulate_taxi(1.0, 1.2, 1.5, 2, 2, 0, 0.0, 3.0, 100_000, np.random.default_rng(7))
    se = sim.std(ddof=1) / np.sqrt(sim.size)
    assert abs(taxi_queue_length(s) - sim.mean()) < 3 * se


def test_piecewise_rates_match_monte_carlo():
    lam_X = RateProfile([0, 1, 2, 10], [4.0, 1.0, 3.0])
    lam_T = RateProfile([0, 1.5, 10], [0.5, 2.5])
    p = TaxiParams(lam_X, lam_T, 2.0, 3, 50)
    s0 = TaxiState.point(5, 1, 3, 50)
    s = TaxiState(final_state(build_taxi_generator(p), s0.state, 4.0, 0.01), 3)
    sim = simulate_taxi(([0, 1, 2, 10], [4.0, 1.0, 3.0]), ([0, 1.5, 10], [0.5, 2.5]), 2.0, 3, 5, 1, 0.0, 4.0,
                        100_000, np.random.default_rng(11))
    se = sim.std(ddof=1) / np.sqrt(sim.size)
    assert abs(taxi_queue_length(s) - sim.mean()) < 3 * se


rates = st.floats(0, 4)


@given(rates, rates, st.floats(0.1, 5), st.integers(1, 4), st.integers(0, 6), st.integers(0, 4))
@settings(max_examples=30, deadline=None)
def test_marginals_and_boundaries(lx, lt, mu, K, i0, j0):
    cap = 15
    p = params(lx, lt, mu, K_T=K, cap=cap)
    s0 = TaxiState.point(i0, min(j0, K), K, cap)
    for st_ in solve_transient(build_taxi_generator(p), s0.state, 2.0, 0.02):
        g = TaxiState(st_, K).grid()
        assert g.shape == (cap + 1, K + 1)
        assert abs(g.sum(axis=1).sum() - 1) <= 1e-8
        assert abs(g.sum(axis=0).sum() - 1) <= 1e-8


@given(st.floats(0, 4), st.floats(0.1, 5), st.integers(1, 4), st.integers(0, 8), st.integers(0, 4))
@settings(max_examples=25, deadline=None)
def test_monotone_without_supply(lx, mu, K, i0, j0):
    p = params(lx, 0.0, mu, K_T=K, cap=20)
    s0 = TaxiState.point(i0, min(j0, K), K, 20)
    pool = [taxi_pool_length(TaxiState(s, K)) for s in solve_transient(build_taxi_generator(p), s0.state, 2, 0.02)]
    assert all(b <= a + 1e-12 for a, b in zip(pool, pool[1:]))


@given(st.floats(0, 4), st.floats(0.1, 5), st.integers(1, 4), st.integers(0, 8), st.integers(0, 4))
@settings(max_examples=25, deadline=None)
def test_monotone_without_passengers(lt, mu, K, i0, j0):
    p = params(0.0, lt, mu, K_T=K, cap=10)
    s0 = TaxiState.point(i0, min(j0, K), K, 10)
    L = [taxi_queue_length(TaxiState(s, K)) for s in solve_transient(build_taxi_generator(p), s0.state, 2, 0.02)]
    assert all(b <= a + 1e-12 for a, b in zip(L, L[1:]))
