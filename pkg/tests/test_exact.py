import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fadeout.errors import NumericalFailureError, OutOfDomainError
from fadeout.exact import (build_rate_matrix, mean_extinction_times,
                           norden_all, norden_tau, quasi_stationary)
from fadeout.model import ModelParams, StateSpace


def hand_case():
    return ModelParams(beta=0.8, gamma=1.0, n_pop=2, k_stages=1)


def test_hand_case_linear_solve():
    tau = mean_extinction_times(hand_case())
    assert abs(tau[0] - 1.2) < 1e-12
    assert abs(tau[1] - 1.7) < 1e-12


def test_hand_case_closed_form():
    p = hand_case()
    assert abs(norden_tau(p, 1) - 1.2) < 1e-12
    assert abs(norden_tau(p, 2) - 1.7) < 1e-12


def test_hand_case_decay_rate():
    # the transient generator is [[-1.4, 0.4], [2, -2]]; its slowest decay
    # rate is the smaller root of x^2 - 3.4 x + 2 (characteristic
    # polynomial of the negated matrix)
    lam_ref = (3.4 - math.sqrt(3.4 ** 2 - 4.0 * 2.0)) / 2.0
    res = quasi_stationary(hand_case())
    assert abs(res.lam - lam_ref) < 1e-12
    assert abs(res.tau_q - 1.0 / lam_ref) < 5e-12


def test_norden_matches_solve_across_regimes():
    for n in (30, 50):
        for r0 in (0.5, 0.8, 1.1, 1.5):
            p = ModelParams(beta=r0, gamma=1.0, n_pop=n)
            direct = mean_extinction_times(p)
            closed = norden_all(p)
            rel = np.max(np.abs(direct - closed) / np.abs(direct))
            assert rel < 1e-10, (n, r0, rel)


def test_norden_requires_single_stage():
    with pytest.raises(OutOfDomainError):
        norden_all(ModelParams(beta=1.0, gamma=1.0, n_pop=10, k_stages=2))
    with pytest.raises(OutOfDomainError):
        norden_tau(ModelParams(beta=1.0, gamma=1.0, n_pop=10), 11)


def test_rate_matrix_row_sums_equal_minus_absorption_rate():
    p = ModelParams(beta=1.3, gamma=0.7, n_pop=8, k_stages=2)
    q, space = build_rate_matrix(p)
    row_sums = np.asarray(q.sum(axis=1)).ravel()
    kg = p.k_stages * p.gamma
    for j, state in enumerate(space.states):
        # absorption in one jump needs a lone individual in the last stage
        lone_last = state.sum() == 1 and state[-1] == 1
        expected = -kg if lone_last else 0.0
        assert abs(row_sums[j] - expected) < 1e-12, tuple(state)


def test_qsd_decay_rate_identity_k1():
    p = ModelParams(beta=1.1, gamma=1.0, n_pop=60)
    res = quasi_stationary(p)
    q1 = res.q_at((1,))
    assert abs(res.lam - p.gamma * q1) < 1e-10


def test_qsd_decay_rate_identity_k2():
    p = ModelParams(beta=1.5, gamma=1.0, n_pop=40, k_stages=2)
    res = quasi_stationary(p)
    assert abs(res.lam - 2.0 * p.gamma * res.q_single_last_stage()) < 1e-10


def test_qsd_is_a_distribution():
    p = ModelParams(beta=1.2, gamma=1.0, n_pop=50)
    res = quasi_stationary(p)
    assert abs(res.q.sum() - 1.0) < 1e-12
    assert (res.q > -1e-15).all()


@given(n=st.integers(2, 12),
       r0=st.floats(0.2, 2.0, allow_nan=False, allow_infinity=False))
@settings(max_examples=20, deadline=None)
def test_mean_times_increase_with_initial_count_k1(n, r0):
    p = ModelParams(beta=r0, gamma=1.0, n_pop=n)
    tau = mean_extinction_times(p)
    assert np.all(np.diff(tau) > 0)


def test_state_space_guard():
    # huge k=2 space trips the nonzero guard instead of exhausting memory
    with pytest.raises(NumericalFailureError):
        build_rate_matrix(ModelParams(beta=1.0, gamma=1.0, n_pop=3000,
                                      k_stages=2))


def test_shared_state_space_reuse():
    p = ModelParams(beta=0.9, gamma=1.0, n_pop=20)
    space = StateSpace(20, 1)
    tau = mean_extinction_times(p, space)
    assert tau.shape == (20,)


def test_qsd_refuses_unresolvable_decay_rate():
    # far above threshold lam ~ exp(-N A) sinks below rounding noise; the
    # sign of the Rayleigh quotient is then arbitrary and the call must
    # refuse instead of returning a garbage (possibly negative) rate
    with pytest.raises(NumericalFailureError):
        quasi_stationary(ModelParams(beta=1.5, gamma=1.0, n_pop=700))
