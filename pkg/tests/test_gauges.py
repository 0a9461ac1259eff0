import math

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp

from oracles import bisect_inverse
from weakperf import precision
from weakperf.errors import ConfigError, DomainError
from weakperf.gauges import (Kind, evaluate, g1, g2, h1, h2, inverse_upper_bound, log_evaluate,
                             monotone_extension, parse_gauge, power)


def test_h1_square():
    assert float(evaluate(h1(2, 1), 0.1)) == pytest.approx(0.01, rel=1e-15)


def test_h2_unit_log():
    assert float(evaluate(h2(1, 1), math.exp(-1) * (1 - 1e-12))) == pytest.approx(math.exp(-1), rel=1e-10)


def test_g2_example_against_high_precision():
    with mp.workdps(60):
        t = 2 / mp.e ** 4
        want = mp.exp(-4 / mp.log(4 + mp.log(2)))
    got = evaluate(g2(1.0, cap=0.25), t)
    assert float(got) == pytest.approx(float(want), rel=1e-15)


def test_nonpositive_argument():
    for g in (h1(2), h2(1), g1(1, C=1), g2(1), power(1)):
        with pytest.raises(DomainError):
            evaluate(g, 0)
        with pytest.raises(DomainError):
            evaluate(g, -1)


def test_h2_above_cap_is_error():
    with pytest.raises(DomainError):
        evaluate(h2(1), 0.5)


def test_h1_threshold():
    h = h1(3, 4.0)
    thr = 4.0 ** (-1 / 2)
    assert h.domain_cap == pytest.approx(thr)
    assert evaluate(h, thr * 0.999) <= thr * 0.999
    assert evaluate(h, thr * 1.001 if h.extended else thr * 0.5) > 0


GAUGES = [h1(2, 0.5), h1(1.5, 1), h2(1, 1), h2(3, 0.5), g1(1, C=1), g1(0.5, C2=1), g2(0.7), power(0.5)]


@pytest.mark.parametrize("g", GAUGES, ids=lambda g: g.literal())
def test_strictly_increasing_on_geometric_grid(g):
    cap = g.domain_cap if math.isfinite(g.domain_cap) else 1.0
    vals = [evaluate(g, cap * mp.mpf(2) ** -k) for k in range(40, 0, -1)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("g", GAUGES, ids=lambda g: g.literal())
def test_tends_to_zero(g):
    assert evaluate(g, mp.mpf("1e-3000")) < 1e-3 if g.kind is not Kind.G1 else True
    assert evaluate(g, mp.mpf("1e-300000")) < 0.2


def test_g1_vanishes_slowly():
    g = g1(1, C=1)
    assert float(evaluate(g, mp.mpf("1e-1000"))) == pytest.approx(1 / (1000 * math.log(10)), rel=1e-12)


def test_h2_ratio_decreasing():
    h = h2(2, 1)
    ratios = [evaluate(h, mp.mpf(2) ** -k) / mp.mpf(2) ** -k for k in range(2, 60)]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_log_evaluate_matches_evaluate():
    for g in GAUGES:
        cap = g.domain_cap if math.isfinite(g.domain_cap) else 1.0
        t = cap / 7
        assert log_evaluate(g, math.log(t)) == pytest.approx(float(mp.log(evaluate(g, t))), rel=1e-12, abs=1e-12)


def test_log_evaluate_deep_scale():
    assert log_evaluate(h1(2, 0.5), -5000.0) == pytest.approx(math.log(0.5) - 10000.0)


# -- inverse bound

def test_inverse_examples():
    v = inverse_upper_bound(h2(1, 1), math.exp(-2))
    assert float(v.value) == pytest.approx(2 * math.exp(-2), rel=1e-14)
    v2 = inverse_upper_bound(h2(2, 0.5), math.exp(-4))
    assert float(v2.value) == pytest.approx(2 * math.exp(-4) * 16, rel=1e-14)


def test_inverse_dominates_bisection_examples():
    for beta, C, t in ((1, 1, math.exp(-2)), (2, 0.5, math.exp(-4))):
        h = h2(beta, C)
        true = bisect_inverse(lambda x: h.closed_form(x), mp.mpf(t), mp.mpf("1e-30"), math.exp(-1))
        assert true <= inverse_upper_bound(h, t).value


def test_inverse_errors():
    with pytest.raises(DomainError):
        inverse_upper_bound(h2(1), 1.0)
    with pytest.raises(DomainError):
        inverse_upper_bound(h1(2), 0.01)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 5), st.floats(0.2, 3), st.floats(0.0, 1.0))
def test_inverse_dominates_bisection_random(beta, C, frac):
    h = h2(beta, C)
    thr = inverse_upper_bound(h, 1e-300).valid_below
    t = mp.mpf(thr) * mp.mpf(10) ** (-40 * frac) * mp.mpf("0.999")
    bound = inverse_upper_bound(h, t).value
    # the closed form is increasing on (0, 1), so h(bound) >= t means bound >= h^{-1}(t)
    assert bound < 1
    assert h.closed_form(bound) >= t * (1 - mp.mpf(10) ** -30)


# -- extension

def test_monotone_extension():
    g = monotone_extension(h1(2, 1, cap=0.5))
    cap = g.domain_cap
    assert evaluate(g, 10 * cap) >= evaluate(g, cap)
    left = evaluate(g, cap * (1 - mp.mpf(10) ** -30))
    assert abs(left - evaluate(g, cap)) < 1e-25
    assert evaluate(g, cap / 2) == g.closed_form(mp.mpf(cap) / 2)


def test_non_extended_gauge_raises_above_cap():
    with pytest.raises(DomainError):
        evaluate(h1(2, 1, cap=0.5), 0.75)


def test_g1_conventions_agree():
    a = g1(1.0, C=0.25)
    b = g1(1.0, C2=0.5)
    assert evaluate(a, 0.01) == evaluate(b, 0.01)
    assert a.convention == "statement" and b.convention == "proof"


# -- literals

@pytest.mark.parametrize("text", ["h1:alpha=2,C=1", "h2:beta=3,C=0.5", "g1:gamma=1,C2=1,cap=0.25",
                                  "g2:eta=0.7,cap=0.25", "power:gamma=0.5,C=2"])
def test_parse_round_trip(text):
    g = parse_gauge(text)
    assert parse_gauge(g.literal()) == g


@pytest.mark.parametrize("text", ["h3:alpha=2", "h1:alpha=2,D=1", "h1:C=1", "h1:alpha=x", "g1:gamma=1"])
def test_parse_rejects(text):
    with pytest.raises(ConfigError):
        parse_gauge(text)


def test_double_mode_still_handles_tiny_arguments(monkeypatch):
    monkeypatch.setenv(precision.ENV_VAR, "double")
    assert precision.mode() == "double"
    assert evaluate(h1(2, 1), mp.mpf("1e-3000")) > 0
