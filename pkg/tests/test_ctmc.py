import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.stats import poisson

from oracles import mmck_matrix, stationary, uniformization
from queuenet.ctmc import (Generator, InstabilityError, TransientState, birth_death_generator, choose_truncation,
                           expected_count, final_state, iter_transient, rk4_step, rule, solve_transient)
from queuenet.rates import RateProfile


def flip(a, b):
    states = [0, 1]
    idx = {0: 0, 1: 1}
    return Generator(2, (rule("up", a, states, idx, lambda s: s == 0, lambda s: 1),
                         rule("down", b, states, idx, lambda s: s == 1, lambda s: 0)))


def test_zero_generator_keeps_state():
    g = flip(0.0, 0.0)
    s = final_state(g, TransientState(np.array([0.3, 0.7]), 0.0), 5.0, 0.1)
    np.testing.assert_array_equal(s.probs, [0.3, 0.7])


def test_two_state_closed_form():
    s = final_state(flip(1.0, 1.0), TransientState.point_mass(2, 0), 5.0, 0.01)
    e = math.exp(-10)
    np.testing.assert_allclose(s.probs, [0.5 + 0.5 * e, 0.5 - 0.5 * e], atol=1e-6)


def test_mm1_transient_and_stationary_mean():
    g = birth_death_generator(50, 0.5, 1.0, 1)
    Q = mmck_matrix(0.5, 1.0, 1, 50)
    pi = stationary(Q)
    assert pi @ np.arange(51) == pytest.approx(1.0, abs=1e-9)
    # relaxation scale 1/(1 - sqrt(0.5))^2 ~ 11.7 min: at t=30 the exact mean is still ~0.9927
    s30 = final_state(g, TransientState.point_mass(51, 0), 30.0, 0.01)
    exact30 = uniformization(Q, np.eye(51)[0], 30.0) @ np.arange(51)
    assert expected_count(s30, np.arange(51)) == pytest.approx(exact30, abs=1e-8)
    s100 = final_state(g, s30, 100.0, 0.01)
    assert expected_count(s100, np.arange(51)) == pytest.approx(1.0, abs=1e-4)


def test_empty_horizon():
    g = flip(1, 1)
    p0 = TransientState.point_mass(2, 1, 3.0)
    out = solve_transient(g, p0, 3.0, 0.1)
    assert len(out) == 1 and out[0] is p0


def test_lands_exactly_on_t_end():
    g = flip(1, 2)
    out = solve_transient(g, TransientState.point_mass(2, 0), 1.05, 0.1)
    assert out[-1].t == 1.05
    assert len(out) == 12
    assert [s.t for s in iter_transient(g, TransientState.point_mass(2, 0), 1.05, 0.1)] == [s.t for s in out]


def test_generator_matches_hand_matrix():
    g = birth_death_generator(20, 3.0, 0.5, 8)
    np.testing.assert_allclose(g.matrix(0.0), mmck_matrix(3.0, 0.5, 8, 20), atol=1e-14)


def test_saturation_death_rate():
    Q = birth_death_generator(10, 1.0, 1.0, 2).matrix(0.0)
    assert Q[1, 0] == 1.0
    assert Q[5, 4] == 2.0


def test_instability_detected():
    g = birth_death_generator(40, 30.0, 30.0, 1)
    with pytest.raises(InstabilityError) as err:
        final_state(g, TransientState.point_mass(41, 0), 1.0, 0.2)
    assert err.value.t is not None


def test_bad_inputs():
    g = flip(1, 1)
    with pytest.raises(ValueError):
        final_state(g, TransientState.point_mass(2, 0, 1.0), 0.5)
    with pytest.raises(ValueError):
        final_state(g, TransientState.point_mass(3, 0), 1.0)
    with pytest.raises(ValueError):
        rk4_step(g, TransientState.point_mass(2, 0), 0.0)


def test_fast_path_matches_literal_rk4():
    prof = RateProfile([0, 0.7, 1.3, 4], [2.0, 5.0, 1.0])
    g = birth_death_generator(30, prof, 1.5, 2)
    s = TransientState.point_mass(31, 3)
    dt = 0.05
    literal = [s]
    while literal[-1].t < 3.0 - 1e-12:
        step = min(dt, 3.0 - literal[-1].t)
        nxt = rk4_step(g, literal[-1], step)
        literal.append(TransientState(nxt.probs, round(literal[-1].t + step, 10)))
    fast = solve_transient(g, s, 3.0, dt)
    assert [x.t for x in fast] == pytest.approx([x.t for x in literal])
    for a, b in zip(fast, literal):
        np.testing.assert_allclose(a.probs, b.probs, atol=1e-14)


def test_callable_rates_take_slow_path():
    g = birth_death_generator(20, lambda t: 2.0, 1.0, 1)
    assert g.breakpoints is None
    ref = birth_death_generator(20, 2.0, 1.0, 1)
    a = final_state(g, TransientState.point_mass(21, 0), 2.0, 0.05)
    b = final_state(ref, TransientState.point_mass(21, 0), 2.0, 0.05)
    np.testing.assert_allclose(a.probs, b.probs, atol=1e-15)


def test_breakpoint_respected():
    # rate switches on exactly at t=1: nothing can happen before
    prof = RateProfile([0, 1, 3], [0.0, 2.0])
    g = birth_death_generator(30, prof, 1.0, 1)
    s = final_state(g, TransientState.point_mass(31, 0), 1.0, 0.1)
    assert s.probs[0] == 1.0


def test_truncation_examples():
    assert choose_truncation(None, 4, 30, 5) >= 5
    assert choose_truncation(RateProfile.constant(0, 0, 1), 4, 30, 5) == 5
    assert choose_truncation(RateProfile.constant(12, 0, 30), 4, 30, 0, 1e-9) >= 360
    k = choose_truncation(RateProfile.constant(3, 0, 30), 1, 30, 0, 1e-9)
    assert poisson.sf(k, 90) < 1e-9
    with pytest.raises(ValueError):
        choose_truncation(RateProfile.constant(3, 0, 30), 1, 30, 0, 0.1)


def test_expected_count_examples():
    assert expected_count(TransientState.point_mass(10, 7), np.arange(10)) == 7
    assert expected_count(TransientState(np.full(3, 1 / 3), 0), lambda i: i) == pytest.approx(1)
    g = birth_death_generator(25, 3.0, 1.0, 2)
    s = final_state(g, TransientState.point_mass(26, 4), 2.0, 0.05)
    assert expected_count(s, np.arange(26)) == pytest.approx(sum(i * p for i, p in enumerate(s.probs)), abs=1e-12)


def random_chain(n, rng):
    rates = rng.uniform(0, 3, size=(n, n))
    np.fill_diagonal(rates, 0)
    states = list(range(n))
    idx = {s: s for s in states}
    rules = [rule(f"{a}->{b}", float(rates[a, b]), states, idx, lambda s, a=a: s == a, lambda s, b=b: b)
             for a in range(n) for b in range(n) if a != b]
    return Generator(n, rules), rates


@given(st.integers(2, 7), st.integers(0, 2 ** 32 - 1), st.floats(0, 10))
@settings(max_examples=40, deadline=None)
def test_rows_sum_to_zero(n, seed, t):
    g, _ = random_chain(n, np.random.default_rng(seed))
    np.testing.assert_allclose(g.matrix(t) @ np.ones(n), 0.0, atol=1e-12)


@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_matches_matrix_exponential(n, seed):
    rng = np.random.default_rng(seed)
    g, _ = random_chain(n, rng)
    p0 = rng.dirichlet(np.ones(n))
    out = solve_transient(g, TransientState(p0, 0.0), 3.0, 0.01)
    for s in out[:: 50] + [out[-1]]:
        np.testing.assert_allclose(s.probs, p0 @ expm(g.matrix(0) * s.t), atol=1e-6)


@given(st.lists(st.floats(0, 6), min_size=1, max_size=5), st.floats(0.2, 3), st.integers(1, 3),
       st.integers(0, 10))
@settings(max_examples=30, deadline=None)
def test_conservation_on_random_profiles(values, mu, c, start):
    prof = RateProfile(np.arange(len(values) + 1) * 1.5, values)
    g = birth_death_generator(40, prof, mu, c)
    for s in solve_transient(g, TransientState.point_mass(41, start), prof.horizon[1], 0.02):
        assert abs(s.probs.sum() - 1) <= 1e-8
        assert s.probs.min() >= -1e-10


def test_order_four_against_fine_reference():
    g = birth_death_generator(60, 2.0, 1.0, 3)
    p0 = TransientState.point_mass(61, 10)
    ref = final_state(g, p0, 4.0, 0.2 / 16).probs
    e1 = np.abs(final_state(g, p0, 4.0, 0.2).probs - ref).max()
    e2 = np.abs(final_state(g, p0, 4.0, 0.1).probs - ref).max()
    assert e1 / e2 >= 12


def test_uniformization_oracle_itself():
    Q = mmck_matrix(1.0, 2.0, 1, 10)
    p0 = np.eye(11)[0]
    np.testing.assert_allclose(uniformization(Q, p0, 2.0), p0 @ expm(Q * 2.0), atol=1e-12)
