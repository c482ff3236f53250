import math

import pytest
from hypothesis import given, strategies as st

from capax.reference import (beta_fn, gamma_fn, hopf_capacity_exact,
                             hopf_profile, ring_capacity_exact)

# frozen from a 40-digit mpmath evaluation of 16*pi^3/gamma(1/4)^4
HOPF_CAPACITY_40 = 2.8710800441845200

# 2*sqrt(pi)/gamma(1/4)^2, the profile normalization, same oracle run
PROFILE_CONST_40 = 0.2696763005941897

RING_HALF_THREEHALF = 10.411683527942081


def test_hopf_capacity_matches_frozen_oracle():
    assert abs(hopf_capacity_exact() - HOPF_CAPACITY_40) <= 1e-11 * HOPF_CAPACITY_40


def test_gamma_quarter():
    assert gamma_fn(0.25) == pytest.approx(3.6256099082219083, rel=1e-14)


def test_beta_symmetry_and_value():
    assert beta_fn(0.25, 0.5) == pytest.approx(beta_fn(0.5, 0.25), rel=1e-14)
    # B(a,b) = gamma(a)gamma(b)/gamma(a+b)
    assert beta_fn(1.5, 2.5) == pytest.approx(
        gamma_fn(1.5) * gamma_fn(2.5) / gamma_fn(4.0), rel=1e-13)


def test_ring_capacity_value_and_scale_invariance():
    assert ring_capacity_exact(0.5, 1.5) == pytest.approx(RING_HALF_THREEHALF, rel=1e-14)
    assert ring_capacity_exact(1.0, 3.0) == pytest.approx(RING_HALF_THREEHALF, rel=1e-14)


def test_profile_endpoints_and_midpoint():
    assert hopf_profile(0.0) == 0.0
    assert hopf_profile(math.pi / 2) == pytest.approx(1.0, abs=1e-13)
    assert hopf_profile(math.pi / 4) == pytest.approx(0.5, abs=1e-13)


def test_profile_against_incomplete_beta_oracle():
    # the profile is a regularized incomplete beta in sin^2(eta)
    from scipy.special import betainc

    for eta in (0.2, 0.5, 0.9, 1.3):
        expected = betainc(0.25, 0.25, math.sin(eta) ** 2)
        assert hopf_profile(eta) == pytest.approx(expected, abs=1e-12)


@given(st.floats(min_value=1e-3, max_value=math.pi / 2 - 1e-3))
def test_profile_monotone_and_symmetric(eta):
    assert 0.0 < hopf_profile(eta) < 1.0
    assert hopf_profile(math.pi / 2 - eta) == pytest.approx(
        1.0 - hopf_profile(eta), abs=1e-12)


@given(st.floats(min_value=0.05, max_value=1.0),
       st.floats(min_value=1.5, max_value=20.0))
def test_ring_capacity_monotone_in_outer_radius(a, factor):
    # enlarging the gap decreases the capacity
    assert ring_capacity_exact(a, factor * a) > ring_capacity_exact(a, 2 * factor * a)
