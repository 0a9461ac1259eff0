import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp

from oracles import laplace_radial_bvp
from weakperf import harmonic
from weakperf.errors import DomainError
from weakperf.gauges import evaluate, h1, h2
from weakperf.harmonic import (CapacityProfile, annulus_comparison_phi, bound_report, chen_integral,
                               chen_power_closed_form, chen_upper_bound, delta_condition_probe, lhmd1_bound,
                               lhmd1_constants, lhmd2_bound, lhmd2_constants, prop41_I_of_r, prop42_phi_u1,
                               prop42_phi_u2, radial_laplace_fd)


# -- phi

def test_phi_midpoint():
    assert annulus_comparison_phi(0.1, 0.9, math.sqrt(0.09)) == pytest.approx(0.5, rel=1e-15)


def test_phi_gauge_scale_example():
    assert prop42_phi_u1(0.1, 2, 3) == pytest.approx(0.5, abs=1e-15)


def test_phi_increasing_and_bounded():
    s = np.linspace(0.11, 0.89, 50)
    v = [annulus_comparison_phi(0.1, 0.9, x) for x in s]
    assert all(a < b for a, b in zip(v, v[1:]))
    assert all(0 <= x <= 1 for x in v)


@pytest.mark.parametrize("args", [(0.5, 0.4, 0.45), (0.1, 0.9, 0.05), (0.1, 0.9, 0.95), (0, 1, 0.5)])
def test_phi_ordering(args):
    with pytest.raises(DomainError):
        annulus_comparison_phi(*args)


@pytest.mark.parametrize("inner,outer", [(0.1, 1.0), (0.5, 2.0), (1e-3, 1e-2)])
def test_phi_against_bvp_and_fd(inner, outer):
    s = np.linspace(inner, outer, 41)[1:-1]
    ref = laplace_radial_bvp(inner, outer, s)
    phi = np.array([annulus_comparison_phi(inner, outer, x) for x in s])
    assert np.max(np.abs(phi - ref)) < 1e-6
    grid, u = radial_laplace_fd(inner, outer, 2001)
    exact = np.log(grid / inner) / np.log(outer / inner)
    assert np.max(np.abs(u - exact)) < 1e-4


def test_gauge_scale_limits():
    assert prop42_phi_u1(mp.mpf("1e-12"), 2, 3) == pytest.approx(0.5, abs=1e-6)
    # with C = C' = 1 the U2 ratio equals (beta' - beta)/beta' at every r
    for k in (12, 100, 1000):
        assert prop42_phi_u2(mp.mpf(10) ** -k, 1, 2) == pytest.approx(0.5, abs=1e-12)
        assert prop42_phi_u2(mp.mpf(10) ** -k, 1, 4) == pytest.approx(0.75, abs=1e-12)
    # other constants: the r -> 0 limit is approached as 1/log log(1/r)
    gaps = [abs(prop42_phi_u2(mp.mpf(10) ** -k, 1, 2, C=2.0, C_p=0.5) - 0.5) for k in (12, 100, 10 ** 4, 10 ** 8)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_delta_probe():
    p = delta_condition_probe(h1(2, 1), mp.mpf(0.1) ** 3, 0.1, 0.4)
    assert p.phi == pytest.approx(0.5) and bool(p)
    assert not delta_condition_probe(h1(2, 1), mp.mpf(0.1) ** 3, 0.1, 0.6)
    assert delta_condition_probe(h2(1, 1), 1e-9, 0.01, 0.0)


def test_delta_probe_errors():
    with pytest.raises(DomainError):
        delta_condition_probe(h1(2, 1), 0.5, 0.1, 0.1)
    with pytest.raises(DomainError):
        delta_condition_probe(h1(2, 1), 1e-4, 0.1, 1.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.1, 5), st.floats(0.01, 0.3), st.floats(1e-6, 0.5))
def test_delta_probe_eps_zero_always_true(alpha, r, frac):
    h = h1(alpha, 1.0)
    s = float(evaluate(h, r))
    assert delta_condition_probe(h, s * frac, r, 0.0)


# -- Chen bound

@settings(max_examples=20, deadline=None)
@given(st.floats(1.05, 1.95), st.floats(0.2, 3), st.floats(1e-3, 0.06), st.floats(1, 30))
def test_chen_power_matches_closed_form(alpha, C, kappa, decades):
    cap = CapacityProfile.power_law(C, alpha)
    r = 1e-2
    top = kappa * r / 2
    z = top * 10 ** -decades
    try:
        q = chen_integral(z, top, kappa, cap)
    except DomainError:
        return                      # profile too large for this draw: reported, not integrated
    assert q == pytest.approx(chen_power_closed_form(z, top, kappa, C, alpha), rel=1e-6)


def test_chen_empty_range():
    cap = CapacityProfile.power_law(1, 1.5)
    assert chen_upper_bound(0.01 * 0.05 / 2, 0.01, 0.05, cap) == 1.0


def test_chen_strictly_decreasing():
    cap = CapacityProfile.power_law(1, 1.5)
    vals = [chen_upper_bound(2.5e-4 * 10 ** -k, 0.01, 0.05, cap) for k in range(1, 10)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(0 <= v <= 1 for v in vals)


def test_chen_inapplicable_profile():
    cap = CapacityProfile.power_law(1e6, 1.5)
    with pytest.raises(DomainError, match="inapplicable"):
        chen_upper_bound(1e-10, 0.01, 0.05, cap)


def test_chen_log_profile_runs():
    cap = CapacityProfile.log_corrected(1, 2)
    v = chen_upper_bound(1e-12, 0.01, 0.05, cap)
    assert 0 < v < 1


def test_chen_kappa_range():
    with pytest.raises(DomainError):
        chen_upper_bound(1e-9, 0.01, 0.1, CapacityProfile.power_law(1, 1.5))


def test_chen_below_lhmd1_chain():
    cap = CapacityProfile.power_law(0.5, 1.4)
    kappa, r1 = 0.05, 0.01
    const = lhmd1_constants(cap, kappa, r1)
    for r in (0.01, 0.005, 1e-3):
        for z in np.geomspace(kappa * r / 2 * 0.99, 1e-40, 12):
            assert chen_upper_bound(float(z), r, kappa, cap) <= lhmd1_bound(float(z), r, const.exponent, const.C3) + 1e-12


def test_lhmd2_constants_chain():
    cap = CapacityProfile.log_corrected(0.5, 2)
    kappa, r1 = 0.05, 0.03
    const = lhmd2_constants(cap, kappa, r1)
    for r in (0.03, 1e-3):
        for z in np.geomspace(kappa * r / 2 * 0.99, 1e-40, 12):
            assert chen_upper_bound(float(z), r, kappa, cap) <= lhmd2_bound(float(z), r, const.exponent, const.C3) + 1e-12


# -- LHMD bounds

def test_lhmd1_examples():
    assert lhmd1_bound(0.1, 0.1, 1, 0.7) == pytest.approx(0.7)
    assert lhmd1_bound(0.01, 0.1, 1, 1) == pytest.approx(0.5, rel=1e-15)
    vals = [lhmd1_bound(10.0 ** -k, 0.1, 1, 1) for k in range(1, 30)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        lhmd1_bound(0.5, 1.0, 1, 1)


def test_lhmd2_examples():
    r = math.exp(-math.e ** 2)
    assert lhmd2_bound(r, r, 1, 0.6) == pytest.approx(0.6)
    with mp.workdps(50):
        z = mp.exp(-mp.e ** 3)
        want = mp.exp(-(mp.e ** 3 / 3 - mp.e ** 2 / 2))
    assert lhmd2_bound(z, r, 1, 1) == pytest.approx(float(want), rel=1e-14)
    vals = [lhmd2_bound(mp.mpf(10) ** -k, 0.01, 1, 1) for k in range(3, 40)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        lhmd2_bound(1e-3, 0.1, 1, 1)


def test_clamping_reported():
    rep = bound_report("lhmd1", 0.05, 0.1, gamma=1, C3=5)
    assert rep.bound_value == 1.0 and rep.clamped
    rep2 = bound_report("lhmd1", 0.001, 0.1, gamma=1, C3=1)
    assert not rep2.clamped


# -- log-log ratio I(r)

def test_I_limit():
    for beta in (1, 3, 10):
        gaps = [abs(prop41_I_of_r(mp.mpf(r), beta) + beta) for r in ("1e-8", "1e-16", "1e-32", "1e-64")]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] / beta < 0.25


def test_I_beta_zero():
    for r in ("1e-3", "1e-30", "1e-300"):
        assert prop41_I_of_r(mp.mpf(r), 0) == 0


def test_I_sign():
    for r in np.geomspace(1e-2, 1e-200, 20):
        assert prop41_I_of_r(float(r), 2) < 0


def test_I_range():
    with pytest.raises(DomainError):
        prop41_I_of_r(0.1, 1)
