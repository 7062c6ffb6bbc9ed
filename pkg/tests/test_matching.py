import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contour_bench.matching import (
    GridIndex,
    MatchResult,
    ShapeMismatchError,
    Tolerance,
    ToleranceError,
    even_ceil,
    match_exact,
    match_fast,
    match_loose,
    tolerance_for,
)
from contour_bench.raster import ContourMap
from oracles import matching_by_assignment, matching_by_deficiency


def _map(shape, pts):
    bits = np.zeros(shape, bool)
    for y, x in pts:
        bits[y, x] = True
    return ContourMap(bits)


def _tol(t):
    return Tolerance(d_max=0.0075, image_size=1024, t_pixels=t)


def _random_pair(rng, shape=(16, 16), max_pts=20):
    n = shape[0] * shape[1]
    a = rng.choice(n, size=int(rng.integers(0, max_pts + 1)), replace=False)
    b = rng.choice(n, size=int(rng.integers(0, max_pts + 1)), replace=False)
    pa = np.zeros(n, bool)
    pa[a] = True
    pb = np.zeros(n, bool)
    pb[b] = True
    return ContourMap(pa.reshape(shape)), ContourMap(pb.reshape(shape))


@pytest.mark.parametrize("x,expected", [(7.68, 8), (1024 * 0.0075, 8), (8.0, 8), (8.0001, 10),
                                        (0.1, 2), (2.0, 2), (3.84, 4)])
def test_even_ceil(x, expected):
    assert even_ceil(x) == expected


@given(st.floats(min_value=1e-6, max_value=1e6))
def test_even_ceil_properties(x):
    e = even_ceil(x)
    assert e % 2 == 0 and e >= x and e < x + 2


@pytest.mark.parametrize("x", [0, -1.0])
def test_even_ceil_domain(x):
    with pytest.raises(ToleranceError):
        even_ceil(x)


@pytest.mark.parametrize("w,h,t", [(1024, 1024, 8), (512, 512, 4), (1024, 512, 8), (512, 1024, 8)])
def test_tolerance_for(w, h, t):
    tol = tolerance_for(0.0075, w, h)
    assert tol.t_pixels == t
    assert tol.image_size == max(w, h)


def test_tolerance_for_errors():
    with pytest.raises(ToleranceError):
        tolerance_for(0.0075, 0, 10)
    with pytest.raises(ToleranceError):
        tolerance_for(0.0, 10, 10)
    assert tolerance_for(0.0075, 1024, 512, side="min").t_pixels == 4


def test_single_edge_graph():
    pred = _map((10, 10), [(0, 0)])
    gt = _map((10, 10), [(0, 5)])
    for match in (match_exact, match_fast):
        assert match(pred, gt, _tol(8)).n_matched == 1
        assert match(pred, gt, _tol(4)).n_matched == 0


def test_distance_is_euclidean_inclusive():
    # (6, 8) is exactly 10 away; (7, 8) is farther
    gt = _map((20, 20), [(0, 0)])
    assert match_fast(_map((20, 20), [(6, 8)]), gt, _tol(10)).n_matched == 1
    assert match_fast(_map((20, 20), [(7, 8)]), gt, _tol(10)).n_matched == 0


def test_identity_matching():
    rng = np.random.default_rng(0)
    c, _ = _random_pair(rng, (32, 32), 200)
    for match in (match_exact, match_fast):
        r = match(c, c, _tol(2))
        assert r.n_matched == r.n_pred == r.n_gt == c.count()


def test_empty_sides():
    empty = ContourMap.empty(8, 8)
    some = _map((8, 8), [(1, 1), (2, 2)])
    assert match_fast(empty, some, _tol(8)) == MatchResult(0, 2, 0)
    assert match_fast(some, empty, _tol(8)) == MatchResult(2, 0, 0)
    assert match_fast(empty, empty, _tol(8)) == MatchResult(0, 0, 0)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        match_fast(ContourMap.empty(4, 4), ContourMap.empty(4, 5), _tol(2))
    with pytest.raises(ShapeMismatchError):
        match_exact(ContourMap.empty(4, 4), ContourMap.empty(5, 4), _tol(2))


def test_one_to_one_not_existence():
    # three predictions crowd one GT pixel: only one can be matched
    pred = _map((9, 9), [(4, 3), (4, 4), (4, 5)])
    gt = _map((9, 9), [(4, 4)])
    assert match_fast(pred, gt, _tol(2)).n_matched == 1
    loose = match_loose(pred, gt, _tol(2))
    assert loose.n_matched == 3 and loose.gt_hits == 1


def test_assignment_oracle_agrees_with_deficiency_oracle():
    rng = np.random.default_rng(11)
    for _ in range(60):
        a, b = _random_pair(rng, (12, 12), 7)
        t = int(rng.choice([2, 4]))
        pa, pb = a.coords().tolist(), b.coords().tolist()
        assert matching_by_assignment(pa, pb, t) == matching_by_deficiency(pa, pb, t)


@pytest.mark.parametrize("seed", range(4))
def test_fast_and_exact_against_exhaustive_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    for _ in range(25):
        a, b = _random_pair(rng)
        tol = _tol(int(rng.choice([2, 4, 8])))
        expected = matching_by_deficiency(a.coords().tolist(), b.coords().tolist(), tol.t_pixels)
        assert match_fast(a, b, tol).n_matched == expected
        assert match_exact(a, b, tol).n_matched == expected


def test_fast_equals_exact_on_dense_maps():
    rng = np.random.default_rng(7)
    for _ in range(30):
        a = ContourMap(rng.random((40, 40)) < 0.15)
        b = ContourMap(rng.random((40, 40)) < 0.05)
        tol = _tol(int(rng.choice([2, 4, 6])))
        assert match_fast(a, b, tol) == match_exact(a, b, tol)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 6, 8]))
def test_symmetry(seed, t):
    a, b = _random_pair(np.random.default_rng(seed), (20, 20), 30)
    assert match_fast(a, b, _tol(t)).n_matched == match_fast(b, a, _tol(t)).n_matched


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotone_in_tolerance(seed):
    a, b = _random_pair(np.random.default_rng(seed), (20, 20), 30)
    counts = [match_fast(a, b, _tol(t)).n_matched for t in (2, 4, 6, 8, 10)]
    assert counts == sorted(counts)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotone_in_pixels(seed):
    rng = np.random.default_rng(seed)
    a, b = _random_pair(rng, (20, 20), 30)
    bits = a.bits.copy()
    y, x = rng.integers(0, 20, size=2)
    bits[y, x] = True
    tol = _tol(4)
    base = match_fast(a, b, tol)
    grown = match_fast(ContourMap(bits), b, tol)
    assert grown.n_matched >= base.n_matched
    assert base.n_matched <= min(base.n_pred, base.n_gt)


def test_grid_index_query_matches_brute_force():
    rng = np.random.default_rng(2)
    pts = rng.integers(0, 60, size=(300, 2))
    qs = rng.integers(0, 60, size=(200, 2))
    for radius in (2, 5, 8):
        index = GridIndex(pts, radius)
        qi, pi = index.query_pairs(qs, radius, chunk=37)
        got = set(zip(qi.tolist(), pi.tolist()))
        want = {(i, j) for i, q in enumerate(qs) for j, p in enumerate(pts)
                if math.dist(q, p) <= radius}
        assert got == want
