import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_annulus_hit, brute_distance
from weakperf.cantor import CantorIntervalSet
from weakperf.errors import DomainError
from weakperf.geometry import (Annulus, Disc, PlanarSetSample, Point, annulus_hits_set, dist_to_set,
                               read_point_cloud, write_point_cloud)


def single(x, y, res=0.01):
    return PlanarSetSample([(x, y)], resolution=res, diameter=1.0)


def test_point_rejects_nonfinite():
    with pytest.raises(DomainError):
        Point(math.nan, 0)
    with pytest.raises(DomainError):
        Point(0, math.inf)


def test_disc_and_annulus_invariants():
    with pytest.raises(DomainError):
        Disc(Point(0, 0), 0)
    with pytest.raises(DomainError):
        Annulus(Point(0, 0), 1.0, 1.0)
    assert Disc(Point(0, 0), 0.5).diameter == 1.0


def test_sample_invariants():
    with pytest.raises(DomainError, match="empty set"):
        PlanarSetSample([], resolution=0.1, diameter=1)
    with pytest.raises(DomainError):
        PlanarSetSample([(0, 0), (1, 0)], resolution=2.0)


def test_distance_single_point():
    assert dist_to_set((0, 0), single(3, 4)) == 5


def test_distance_on_sample_is_zero():
    S = PlanarSetSample.segment((0, 0), (1, 0), 11)
    assert dist_to_set(S.point(3), S) == 0
    assert dist_to_set((0.05, 0.0), S) > 0


def test_distance_matches_scan_on_cantor_sample():
    S = CantorIntervalSet.u1(0.1, 2, 3).to_sample()
    pts = [tuple(p) for p in S.xy]
    assert dist_to_set((0.3, 0), S) == brute_distance((0.3, 0), pts)


def test_grid_index_is_bit_identical_to_scan():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, size=(12000, 2))
    S = PlanarSetSample(pts, resolution=1e-3)
    assert S._grid is not None
    for z in rng.uniform(-1.5, 1.5, size=(40, 2)):
        assert dist_to_set(tuple(z), S) == float(S.distances(tuple(z)).min())


def test_annulus_examples():
    A = Annulus(Point(0, 0), 0.5, 1)
    assert annulus_hits_set(A, single(0.7, 0)).hit
    assert not annulus_hits_set(A, single(0.1, 0)).hit


def test_annulus_resolution_margin_not_robust():
    A = Annulus(Point(0, 0), 0.5, 1)
    res = annulus_hits_set(A, single(1.005, 0))
    assert res.hit and not res.robust


def test_cantor_gap_annulus_is_empty():
    c = CantorIntervalSet.u1(0.1, 2, 4)
    S = c.to_sample()
    # centred at 0: the level-1 gap is (l1, l0 - l1) = (0.01, 0.09)
    A = Annulus(Point(0, 0), 0.02, 0.08)
    assert not annulus_hits_set(A, S).hit
    assert not brute_annulus_hit((0, 0), 0.02, 0.08, [tuple(p) for p in S.xy])


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
def test_annulus_monotone(inner, w, grow):
    S = PlanarSetSample.circle((0, 0), 1.0, 64, extra=[(0.3, 0.2)])
    A = Annulus(Point(0.1, 0), inner, inner + w)
    B = Annulus(Point(0.1, 0), max(0.0, inner - grow), inner + w + grow)
    if annulus_hits_set(A, S).hit:
        assert annulus_hits_set(B, S).hit


@settings(max_examples=100, deadline=None)
@given(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), st.tuples(st.floats(-2, 2), st.floats(-2, 2)))
def test_distance_is_lipschitz(z1, z2):
    S = PlanarSetSample.circle((0, 0), 1.0, 50)
    assert abs(dist_to_set(z1, S) - dist_to_set(z2, S)) <= math.dist(z1, z2) + 1e-12


def test_point_cloud_round_trip(tmp_path):
    S = PlanarSetSample.segment((0, 0), (1, 0), 17)
    p = tmp_path / "s.points"
    write_point_cloud(S, p)
    assert p.read_text().splitlines()[0].startswith("# resolution")
    T = read_point_cloud(p)
    assert np.array_equal(T.xy, S.xy)
    assert T.resolution == S.resolution and T.diameter == S.diameter


def test_point_cloud_bad_header(tmp_path):
    p = tmp_path / "bad.points"
    p.write_text("0 0\n1 1\n")
    with pytest.raises(DomainError):
        read_point_cloud(p)
