import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fadeout.errors import NotApplicableError, OutOfDomainError
from fadeout.model import (ModelParams, StateSpace, TransitionSchema,
                           r0_and_equilibria)


def test_params_validation():
    with pytest.raises(OutOfDomainError):
        ModelParams(beta=-1.0, gamma=1.0, n_pop=10)
    with pytest.raises(OutOfDomainError):
        ModelParams(beta=1.0, gamma=0.0, n_pop=10)
    with pytest.raises(OutOfDomainError):
        ModelParams(beta=1.0, gamma=1.0, n_pop=0)
    with pytest.raises(OutOfDomainError):
        ModelParams(beta=1.0, gamma=1.0, n_pop=10, k_stages=0)


def test_r0_and_endemic_fraction():
    p = ModelParams(beta=1.5, gamma=1.0, n_pop=100)
    assert p.r0() == 1.5
    assert math.isclose(p.endemic_fraction(), 1.0 - 1.0 / 1.5, rel_tol=1e-15)
    vec = ModelParams(beta=1.5, gamma=1.0, n_pop=100,
                      k_stages=3).endemic_fraction_vector()
    assert np.allclose(vec, (1.0 - 1.0 / 1.5) / 3.0)


def test_endemic_fraction_below_threshold_raises():
    p = ModelParams(beta=0.8, gamma=1.0, n_pop=100)
    with pytest.raises(NotApplicableError):
        p.endemic_fraction()
    r0, vec = r0_and_equilibria(p)
    assert r0 == 0.8 and vec is None


def test_state_space_size_and_order():
    space = StateSpace(3, 1)
    assert space.size == 3
    assert [space.unrank(j) for j in range(3)] == [(1,), (2,), (3,)]

    space = StateSpace(2, 2)
    # C(4, 2) - 1 = 5 transient states
    assert space.size == 5
    all_states = {tuple(s) for s in space.states}
    assert all_states == {(1, 0), (2, 0), (0, 1), (1, 1), (0, 2)}


def test_state_space_rejects_foreign_states():
    space = StateSpace(4, 2)
    with pytest.raises(OutOfDomainError):
        space.rank((0, 0))
    with pytest.raises(OutOfDomainError):
        space.rank((5, 0))
    with pytest.raises(OutOfDomainError):
        space.unrank(space.size)


@given(n=st.integers(1, 12), k=st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_state_space_rank_unrank_bijection(n, k):
    space = StateSpace(n, k)
    assert len(space) == math.comb(n + k, k) - 1
    for j in range(space.size):
        s = space.unrank(j)
        assert sum(s) >= 1 and sum(s) <= n
        assert space.rank(s) == j


def test_transition_schema_event_count_and_rates():
    p = ModelParams(beta=2.0, gamma=1.0, n_pop=10, k_stages=3)
    schema = TransitionSchema(p)
    assert len(schema.events) == 4  # infection, 2 stage moves, recovery

    state = np.array([2, 1, 3])
    tot = 6
    by_name = {ev.name: ev for ev in schema.events}
    assert math.isclose(by_name["infection"].rate(state),
                        2.0 / 10 * tot * (10 - tot))
    assert by_name["infection"].delta == (1, 0, 0)
    assert math.isclose(by_name["stage_1_to_2"].rate(state), 3 * 1.0 * 2)
    assert by_name["stage_1_to_2"].delta == (-1, 1, 0)
    assert math.isclose(by_name["recovery"].rate(state), 3 * 1.0 * 3)
    assert by_name["recovery"].delta == (0, 0, -1)


def test_transition_rates_vanish_appropriately():
    p = ModelParams(beta=2.0, gamma=1.0, n_pop=10, k_stages=2)
    schema = TransitionSchema(p)
    full = np.array([10, 0])
    for ev in schema.events:
        if ev.name == "infection":
            assert ev.rate(full) == 0.0  # no susceptibles left
    empty_last = np.array([3, 0])
    by_name = {ev.name: ev for ev in schema.events}
    assert by_name["recovery"].rate(empty_last) == 0.0
