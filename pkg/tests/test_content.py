import math

import numpy as np
import pytest
from mpmath import mp

from oracles import exhaustive_min_cover
from weakperf import content
from weakperf.cantor import CantorIntervalSet, MassDistribution, build_disc_tree, mass_of_disc
from weakperf.content import (candidate_covers, content_upper, content_upper_family, mass_lower_bound,
                              theorem14_converse_probe, theorem14_forward_certificate,
                              u1_gauge_for_tree, validate_disc_mass_inequality)
from weakperf.errors import DomainError, ValidationError
from weakperf.gauges import evaluate, g1, g2, h1, h2, power
from weakperf.geometry import Disc, PlanarSetSample, Point


@pytest.fixture(scope="module")
def u1():
    c = CantorIntervalSet.u1(0.1, 2, 9)
    t = build_disc_tree(c, 0, 0.05, h1(2, 0.5), 0.25, 8)
    return c, t


def test_level_cover_values():
    c = CantorIntervalSet.u1(0.1, 2, 6)
    g = power(1.0)
    covers = list(candidate_covers(c))
    for j in range(7):
        cov = next(cv for cv in covers if cv.label == f"level {j}")
        assert cov.value(g) == pytest.approx(float(2 ** j * c.lengths[j]), rel=1e-14)
        assert cov.n_discs == 2 ** j


def test_level_cover_discs_cover_the_sample():
    c = CantorIntervalSet.u1(0.1, 2, 4)
    with mp.workdps(c.dps):
        xs = [mp.mpf(c.position(i)[0]) for i in range(c.n_points)]
        for j in range(5):
            discs = next(cv for cv in candidate_covers(c) if cv.label == f"level {j}").discs()
            for x in xs:
                assert any(abs(x - d.center.x) <= d.radius * (1 + mp.mpf("1e-20")) for d in discs)


def test_upper_picks_min():
    c = CantorIntervalSet.u1(0.1, 2, 6)
    up = content_upper(c, power(1.0))
    assert up.value == min(cv.value(power(1.0)) for cv in candidate_covers(c))


def test_single_point():
    S = PlanarSetSample([(0.3, 0.3)], resolution=1e-3, diameter=1.0)
    up = content_upper(S, power(1.0))
    assert up.value == 0 and up.caveat


def test_budget_antitone():
    S = PlanarSetSample.circle((0, 0), 1.0, 12, extra=[(3, 0), (3.1, 0)])
    g = power(0.5)
    vals = [content_upper(S, g, budget=b).value for b in (1, 2, 4, 8, 14)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        content_upper(S, g, budget=0)


def test_exhaustive_oracle_level2():
    c = CantorIntervalSet.u1(0.2, 2, 2)
    ints = [(float(a), float(l)) for a, l in c.intervals(2)]
    targets = [(a, 0.0) for a, _ in ints] + [(a + l, 0.0) for a, l in ints]
    # dyadic candidate family: one disc per interval at levels 0, 1, 2
    fam = []
    for j in range(3):
        for a, l in c.intervals(j):
            fam.append((float(a + l / 2), 0.0, float(l / 2) * (1 + 1e-12)))
    g = power(0.7)
    got, chosen = content_upper_family(targets, [Disc(Point(x, y), r) for x, y, r in fam], g)
    want = exhaustive_min_cover(targets, fam, lambda d: float(evaluate(g, d)))
    assert float(got) == pytest.approx(want, rel=1e-12)
    assert float(content_upper(c, g).value) == pytest.approx(want, rel=1e-9)


def test_family_solver_random_small_instances():
    rng = np.random.default_rng(11)
    g = power(0.8)
    for _ in range(10):
        targets = [tuple(p) for p in rng.uniform(0, 1, size=(4, 2))]
        fam = [(float(x), float(y), float(r)) for x, y, r in
               zip(rng.uniform(0, 1, 12), rng.uniform(0, 1, 12), rng.uniform(0.1, 0.8, 12))]
        want = exhaustive_min_cover(targets, fam, lambda d: float(evaluate(g, d)))
        got, _ = content_upper_family(targets, [Disc(Point(x, y), r) for x, y, r in fam], g)
        if math.isinf(want):
            assert got == mp.inf
        else:
            assert float(got) == pytest.approx(want, rel=1e-12)


def test_diameter_convention(u1):
    _, t = u1
    cov = next(cv for cv in candidate_covers(t) if cv.label == "tree level 3")
    d, m = cov.groups[0]
    assert float(d) == pytest.approx(2 * float(t.radii[3]), rel=1e-14) and m == 8


# -- mass inequality

def test_root_containing_disc_trivially_passes(u1):
    _, t = u1
    m = MassDistribution(t)
    g = u1_gauge_for_tree(t)
    for rho in (0.06, 0.1, 1.0):
        _, hi = mass_of_disc(m, Disc(Point(0, 0), rho))
        assert hi == 1.0
        assert hi <= 18 * evaluate(g, 2 * rho) / evaluate(g, 2 * t.radii[0])


def test_validation_passes_and_negative_control(u1):
    _, t = u1
    m = MassDistribution(t)
    g = u1_gauge_for_tree(t)
    assert g.exponent == pytest.approx(1.0)
    val = validate_disc_mass_inequality(m, g, 18, 300, 7)
    assert val.passed and val.worst_ratio <= 18
    bad = validate_disc_mass_inequality(m, g.with_(exponent=2 * g.exponent), 18, 300, 7)
    assert not bad.passed and bad.violations[0]["ratio"] > 18


def test_validation_deterministic(u1):
    _, t = u1
    m = MassDistribution(t)
    g = u1_gauge_for_tree(t)
    a = validate_disc_mass_inequality(m, g, 18, 50, 3)
    b = validate_disc_mass_inequality(m, g, 18, 50, 3)
    assert a.worst_ratio == b.worst_ratio


def test_validation_needs_depth():
    c = CantorIntervalSet.u1(0.1, 2, 4)
    t = build_disc_tree(c, 0, 0.05, h1(2, 0.5), 0.25, 2)
    with pytest.raises(DomainError):
        validate_disc_mass_inequality(MassDistribution(t), u1_gauge_for_tree(t), trials=5)


def test_mass_lower_bound(u1):
    _, t = u1
    m = MassDistribution(t)
    g = u1_gauge_for_tree(t)
    with pytest.raises(ValidationError):
        mass_lower_bound(m, g, t.radii[0], 18)
    val = validate_disc_mass_inequality(m, g, 18, 200, 1)
    lb = mass_lower_bound(m, g, t.radii[0], 18, val)
    assert float(lb) == pytest.approx(float(evaluate(g, 2 * t.radii[0])) / 18, rel=1e-12)
    assert lb <= content_upper(t, g).value
    bad = validate_disc_mass_inequality(m, g.with_(exponent=3.0), 18, 200, 1)
    with pytest.raises(ValidationError):
        mass_lower_bound(m, g.with_(exponent=3.0), t.radii[0], 18, bad)


def test_nearly_constant_gauge_lower_bound(u1):
    _, t = u1
    m = MassDistribution(t)
    g = power(1e-9)                          # constant up to 1e-7 on every tested scale
    val = validate_disc_mass_inequality(m, g, 18, 100, 2)
    assert val.passed
    assert float(mass_lower_bound(m, g, t.radii[0], 18, val)) == pytest.approx(1 / 18, rel=1e-7)


def test_critical_exponent_separation():
    c = CantorIntervalSet.u1(0.1, 2, 11)
    t = build_disc_tree(c, 0, 0.05, h1(2, 0.5), 0.25, 10)
    g = u1_gauge_for_tree(t)
    above = g.with_(exponent=1.3)
    levels = [cv for cv in candidate_covers(t)]
    v_above = [cv.value(above) for cv in levels]
    v_crit = [cv.value(g) for cv in levels]
    assert v_above[-1] < v_above[0] * 0.2
    assert all(a > b for a, b in zip(v_above[3:], v_above[4:]))
    lower = evaluate(g, 2 * t.radii[0]) / 18
    assert min(v_crit) >= lower


# -- certificates

def test_forward_u1_gamma_from_alpha(u1):
    _, t = u1
    est = theorem14_forward_certificate(t, "U1", trials=200)
    assert est.exponent_source["gamma"] == pytest.approx(1.0)
    assert est.consistent and est.lower >= 0 and est.upper >= 0
    c4 = CantorIntervalSet.u1(0.01, 4, 5)
    t4 = build_disc_tree(c4, 0, 0.005, h1(4, 0.5), 0.25, 4)
    est4 = theorem14_forward_certificate(t4, "U1", trials=200)
    assert est4.exponent_source["gamma"] == pytest.approx(0.5)
    assert est4.consistent


def test_forward_u2():
    c = CantorIntervalSet.u2(1e-30, 3, 10)
    t = build_disc_tree(c, 0, 5e-31, h2(3, 0.5), 0.25, 8)
    est = theorem14_forward_certificate(t, "U2", trials=300)
    assert est.exponent_source["C1"] >= 1
    assert est.exponent_source["eta"] == pytest.approx(math.log(2) / (est.exponent_source["C1"] * 3))
    assert est.consistent


def test_forward_family_check(u1):
    _, t = u1
    with pytest.raises(DomainError):
        theorem14_forward_certificate(t, "U2", trials=10)
    with pytest.raises(DomainError):
        theorem14_forward_certificate(t, "U3", trials=10)


def test_converse_u1():
    res = theorem14_converse_probe(g1(1.0, C=1.0), 0.9, "U1")
    assert res.exponent == 2 and mp.isfinite(res.r1)
    assert res.limit == pytest.approx(0.5)
    res1 = theorem14_converse_probe(g1(1.0, C=1.0), 1.0, "U1")
    assert res1.exponent == 2


def test_converse_u2():
    res = theorem14_converse_probe(g2(1.0), 0.5, "U2")
    assert res.exponent >= 1 and res.limit == -res.exponent
    assert res.limit < math.log(0.5) / 1.0


def test_converse_errors():
    with pytest.raises(DomainError):
        theorem14_converse_probe(g1(1.0, C=1.0), 1.5, "U1")
    with pytest.raises(DomainError):
        theorem14_converse_probe(g2(1.0), 0.5, "U1")
    with pytest.raises(DomainError):
        theorem14_converse_probe(g1(1.0, C=1.0), 1e-300, "U1", max_doublings=2)
