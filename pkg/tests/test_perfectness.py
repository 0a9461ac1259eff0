import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp

from oracles import cantor_endpoints
from weakperf import perfectness
from weakperf.cantor import CantorIntervalSet
from weakperf.errors import DomainError
from weakperf.gauges import h1, h2
from weakperf.geometry import PlanarSetSample
from weakperf.perfectness import fit_condition_parameters, test_h_perfectness as run_test


@pytest.fixture(scope="module")
def segment():
    return PlanarSetSample.segment((0, 0), (1, 0), 200)


def test_segment_uniformly_perfect(segment):
    for r0 in (0.45, 0.3, 0.1):
        cert = run_test(segment, h1(1, 0.5), r0)
        assert cert.verdict and cert.condition == "uniform"
        assert all(p.hit for p in cert.probes)


def test_circle_with_centre_fails():
    S = PlanarSetSample.circle((0, 0), 1.0, 256, extra=[(0, 0)])
    cert = run_test(S, h1(1, 0.5), 0.5, centers=[256], radii=[0.5])
    assert not cert.verdict
    ce = cert.counterexample
    assert ce["center_index"] == 256
    assert float(ce["r"]) == pytest.approx(0.5) and float(ce["inner"]) == pytest.approx(0.25)


def test_resolution_guard(segment):
    with pytest.raises(DomainError, match="grid finer than sample resolution"):
        run_test(segment, h1(1, 0.5), 0.45, radii=[segment.resolution * 2])
    with pytest.raises(DomainError, match="grid finer than sample resolution"):
        run_test(segment, h1(1, 0.5), segment.resolution)


def test_u1_fit_and_exact_gap_oracle():
    c = CantorIntervalSet.u1(0.1, 2, 8)
    fit = fit_condition_parameters(c, "U1")
    assert 1.8 <= fit.exponent <= 2.2
    cert = run_test(c, fit.gauge(), fit.r0)
    assert cert.verdict
    # oracle: on the exact endpoints every gap (s, r) around an endpoint satisfies s >= C r^alpha
    ends = cantor_endpoints([c.lengths[j] for j in range(9)], dps=c.dps + 10)
    with mp.workdps(c.dps + 10):
        pts = sorted({e for ab in ends for e in ab})
        for i in (0, 1, 37, len(pts) - 1):
            d = sorted(abs(p - pts[i]) for j, p in enumerate(pts) if j != i)
            for s, r in zip(d, d[1:]):
                if r / s >= 2 and r <= fit.r0 and s > 10 * c.resolution:
                    assert s >= fit.C * r ** fit.exponent * (1 - mp.mpf(10) ** -9)


def test_u2_fit_in_band():
    c = CantorIntervalSet.u2(1e-30, 3, 8)
    fit = fit_condition_parameters(c, "U2")
    assert 2.5 <= fit.exponent <= 3.5
    assert run_test(c, fit.gauge(), fit.r0).verdict


def test_segment_fit_vacuous(segment):
    fit = fit_condition_parameters(segment, "U1")
    assert fit.vacuous and fit.exponent == pytest.approx(1.0)
    assert "uniformly perfect, U1 vacuous" in fit.note
    assert run_test(segment, fit.gauge(), fit.r0).verdict


def test_fit_degenerate():
    c = CantorIntervalSet.u1(0.1, 2, 1)
    with pytest.raises(DomainError):
        fit_condition_parameters(c, "U1")


def test_fit_family_check(segment):
    with pytest.raises(DomainError):
        fit_condition_parameters(segment, "U3")


@pytest.mark.parametrize("alpha,C", [(1.5, 1.0), (2.0, 0.5), (3.0, 1.0), (1.2, 0.1)])
def test_segment_passes_u1(segment, alpha, C):
    assert run_test(segment, h1(alpha, C), 0.45).verdict


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 1.0), st.floats(1.0, 3.0))
def test_gauge_monotonicity(scale, extra_alpha):
    c = CantorIntervalSet.u1(0.1, 2, 6)
    fit = fit_condition_parameters(c, "U1")
    h = fit.gauge()
    smaller = h1(fit.exponent + extra_alpha, fit.C * scale)  # pointwise <= h below 1
    assert run_test(c, h, fit.r0).verdict
    assert run_test(c, smaller, fit.r0).verdict


def test_default_centres_subsample():
    c = CantorIntervalSet.u1(0.1, 2, 10)
    centres = perfectness.default_centers(c)
    assert len(centres) == perfectness.MAX_CENTERS
    assert centres == perfectness.default_centers(c)
    assert all(c.in_set()[i] for i in centres)


def test_certificate_json(segment):
    cert = run_test(segment, h1(1, 0.5), 0.45)
    d = json.loads(cert.to_json())
    assert d["verdict"] == "pass" and d["n_probes"] == len(cert.probes)
    assert {"condition", "constants", "r0", "worst_margin", "probes"} <= set(d)


def test_probe_order_deterministic():
    c = CantorIntervalSet.u1(0.1, 2, 6)
    a = run_test(c, h1(2, 0.5), 0.05)
    b = run_test(c, h1(2, 0.5), 0.05)
    assert a.probes == b.probes
