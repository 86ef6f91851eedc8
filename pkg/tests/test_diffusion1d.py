import numpy as np
import pytest

from fadeout.diffusion1d import (QuadratureConfig, tau_diff_integral,
                                 tau_diff_ode, tau_diff_profile)
from fadeout.errors import OutOfDomainError
from fadeout.model import ModelParams


def test_integral_matches_ode_solve_subcritical():
    p = ModelParams(beta=0.8, gamma=1.0, n_pop=100)
    for y in (1.0, 10.0, 50.0):
        a = tau_diff_integral(p, y)
        b = tau_diff_ode(p, y)
        assert abs(a - b) / b < 1e-4, y


def test_integral_matches_ode_solve_supercritical():
    p = ModelParams(beta=1.1, gamma=1.0, n_pop=100)
    y = 9.0  # floor(N y*)
    a = tau_diff_integral(p, y)
    b = tau_diff_ode(p, y)
    assert abs(a - b) / b < 1e-4


def test_profile_matches_pointwise_calls():
    p = ModelParams(beta=0.8, gamma=1.0, n_pop=60)
    ys = [2.0, 5.0, 20.0, 40.0]
    prof = tau_diff_profile(p, ys)
    for y, v in zip(ys, prof):
        assert abs(v - tau_diff_integral(p, y)) < 1e-9 * v


def test_profile_is_increasing_in_start():
    p = ModelParams(beta=0.9, gamma=1.0, n_pop=80)
    prof = tau_diff_profile(p, np.arange(1.0, 41.0, 4.0))
    assert np.all(np.diff(prof) > 0)


def test_domain_checks():
    p = ModelParams(beta=0.8, gamma=1.0, n_pop=100)
    with pytest.raises(OutOfDomainError):
        tau_diff_integral(p, 0.2)  # below the absorbing level
    with pytest.raises(OutOfDomainError):
        tau_diff_integral(p, 101.0)
    with pytest.raises(OutOfDomainError):
        tau_diff_integral(ModelParams(beta=0.8, gamma=1.0, n_pop=100,
                                      k_stages=2), 5.0)


def test_custom_absorbing_level():
    p = ModelParams(beta=0.8, gamma=1.0, n_pop=100)
    low = tau_diff_integral(p, 10.0, QuadratureConfig(absorbing_level=0.5))
    high = tau_diff_integral(p, 10.0, QuadratureConfig(absorbing_level=2.0))
    assert high < low  # a larger absorbing set is hit sooner
