import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ikka.topology import (
    Filtration,
    PersistenceDiagram,
    Point2,
    TopologyError,
    betti1_at_scale,
    bottleneck_distance,
    build_rips,
    chebyshev_distance,
    diagram_h1,
    persistence,
    total_persistence,
)
from oracles import brute_bottleneck, brute_force_pd, rips_simplices

RING = [(2, 2), (2, 0), (2, -2), (0, -2), (-2, -2), (-2, 0), (-2, 2), (0, 2)]


@pytest.mark.parametrize(
    "p, q, expected",
    [((0, 0), (3, 1), 3.0), ((2, 2), (2, 2), 0.0), ((1.0, 0.5), (1.2, 0.9), 0.4)],
)
def test_chebyshev_distance(p, q, expected):
    assert chebyshev_distance(Point2(*p), Point2(*q)) == pytest.approx(expected)
    assert chebyshev_distance(q, p) == pytest.approx(expected)


def test_point_must_be_finite():
    with pytest.raises(TopologyError):
        Point2(float("nan"), 0.0)


def test_rips_single_point():
    f = build_rips([(0.0, 0.0)], 1.0)
    assert f.count(0) == 1 and f.count(1) == 0


def test_rips_collinear_triangle():
    f = build_rips([(0, 0), (1, 0), (2, 0)], 10)
    assert [s[2] for s in f.simplices if s[0] == 1] == [1, 1, 2]
    tris = [s for s in f.simplices if s[0] == 2]
    assert len(tris) == 1 and tris[0][2] == 2


def test_rips_ring_counts_match_enumeration():
    f = build_rips(RING, 5)
    # brute-force enumeration: 28 edges, 56 triangles
    assert (f.count(1), f.count(2)) == (28, 56)
    ref = rips_simplices(RING, 5)
    assert sorted((s, v) for _, s, v in f.simplices) == sorted(ref)


def test_rips_ordering_and_faces():
    rng = np.random.default_rng(3)
    f = build_rips(rng.uniform(size=(15, 2)), 0.6)
    keys = [(v, d) for d, _, v in f.simplices]
    assert keys == sorted(keys)
    persistence(f, 1)  # validation passes


def test_rips_point_cap():
    with pytest.raises(TopologyError):
        build_rips(np.zeros((11, 2)), 1.0, point_cap=10)


def test_rips_monotone_in_radius():
    rng = np.random.default_rng(5)
    pts = rng.uniform(size=(12, 2))
    small = {s[1]: s[2] for s in build_rips(pts, 0.3).simplices}
    big = {s[1]: s[2] for s in build_rips(pts, 0.7).simplices}
    assert set(small) <= set(big)
    assert all(big[k] == v for k, v in small.items())


def test_persistence_collinear_empty():
    pts = [(float(i), 0.0) for i in range(7)]
    assert len(persistence(build_rips(pts, 100), 1)) == 0


def test_persistence_ring():
    pd = persistence(build_rips(RING, 5), 1)
    assert pd.sorted_pairs() == [(2.0, 4.0)]
    assert brute_force_pd(RING, 5) == [(2, 4)]


def test_truncated_class_reported_at_max_radius():
    pd = persistence(build_rips(RING, 3), 1)
    assert pd.pairs == ((2.0, 3.0),)
    assert pd.truncated == (True,)


def test_degree_zero_counting_identity():
    rng = np.random.default_rng(11)
    pts = rng.uniform(size=(20, 2))
    pd0 = persistence(build_rips(pts, 0.2), 0)
    assert len(pd0) == 20
    assert all(b == 0 for b, _ in pd0.pairs)


def test_malformed_filtration_rejected():
    bad = Filtration(
        vertices=np.zeros((2, 2)),
        simplices=[(0, (0,), 0.0), (1, (0, 1), 1.0), (0, (1,), 2.0)],
        max_radius=3.0,
    )
    with pytest.raises(TopologyError):
        persistence(bad, 1)


@pytest.mark.parametrize(
    "pairs, expected",
    [((), 0.0), (((2, 4),), 2.0), (((1, 3), (0.5, 0.7)), 2.2)],
)
def test_total_persistence(pairs, expected):
    assert total_persistence(PersistenceDiagram(1, pairs)) == pytest.approx(expected)


@pytest.mark.parametrize(
    "pairs, r, expected",
    [(((2, 4),), 3, 1), (((2, 4),), 5, 0), (((1, 3), (2, 6)), 2.5, 2)],
)
def test_betti1_at_scale(pairs, r, expected):
    assert betti1_at_scale(PersistenceDiagram(1, pairs), r) == expected


def test_bottleneck_examples():
    a = PersistenceDiagram(1, ((1, 4),))
    assert bottleneck_distance(a, a) == 0
    assert bottleneck_distance(PersistenceDiagram(1, ((0, 2),)), PersistenceDiagram(1)) == 1.0
    b = PersistenceDiagram(1, ((1.3, 4.2),))
    assert bottleneck_distance(a, b) == pytest.approx(0.3)


def test_bottleneck_matches_brute_force():
    rng = np.random.default_rng(21)
    for _ in range(40):
        na, nb = rng.integers(0, 4, size=2)
        a = [tuple(sorted(rng.uniform(0, 3, 2))) for _ in range(na)]
        b = [tuple(sorted(rng.uniform(0, 3, 2))) for _ in range(nb)]
        got = bottleneck_distance(PersistenceDiagram(1, a), PersistenceDiagram(1, b))
        assert got == pytest.approx(brute_bottleneck(a, b), abs=1e-12)


def test_oracle_equivalence_small_sample():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(3, 11))
        pts = np.round(rng.uniform(0, 1, size=(n, 2)), 2)
        r = float(rng.uniform(0.2, 1.0))
        got = persistence(build_rips(pts, r), 1).sorted_pairs()
        assert got == pytest.approx(brute_force_pd(pts.tolist(), r))
        assert diagram_h1(pts, r).sorted_pairs() == got


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 8), st.integers(0, 8)), min_size=3, max_size=10, unique=True),
       st.randoms(use_true_random=False))
def test_permutation_invariance(points, rnd):
    pts = [(a / 4, b / 4) for a, b in points]
    shuffled = pts[:]
    rnd.shuffle(shuffled)
    assert diagram_h1(pts, 1.5).sorted_pairs() == diagram_h1(shuffled, 1.5).sorted_pairs()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0.5, 5), st.floats(0.01, 5)), min_size=1, max_size=6),
       st.integers(0, 5), st.floats(0, 0.4), st.sampled_from([-1, 1]), st.sampled_from([-1, 1]))
def test_total_persistence_lipschitz(raw, which, delta, sb, sd):
    pairs = [(b, b + w) for b, w in raw]
    k = which % len(pairs)
    b, d = pairs[k]
    nb, nd = b + sb * delta, d + sd * delta
    assume(nd > nb)
    moved = pairs[:k] + [(nb, nd)] + pairs[k + 1:]
    before = total_persistence(PersistenceDiagram(1, pairs))
    after = total_persistence(PersistenceDiagram(1, moved))
    assert abs(after - before) <= 2 * delta + 1e-9


def test_stability_under_distance_perturbation():
    # points moved by <= eps/2 change every pairwise distance by <= eps
    rng = np.random.default_rng(99)
    for _ in range(30):
        n = int(rng.integers(5, 40))
        pts = rng.uniform(size=(n, 2))
        for eps in (0.01, 0.05, 0.1):
            moved = pts + rng.uniform(-eps / 2, eps / 2, size=pts.shape)
            d = bottleneck_distance(diagram_h1(pts, 3.0), diagram_h1(moved, 3.0))
            assert d <= eps + 1e-9


def test_stability_under_coordinate_perturbation_is_twice_eps():
    rng = np.random.default_rng(98)
    for _ in range(30):
        n = int(rng.integers(5, 40))
        pts = rng.uniform(size=(n, 2))
        eps = 0.05
        moved = pts + rng.uniform(-eps, eps, size=pts.shape)
        d = bottleneck_distance(diagram_h1(pts, 3.0), diagram_h1(moved, 3.0))
        assert d <= 2 * eps + 1e-9


def test_scaled_ring_reaches_twice_eps():
    # pushing every ring point outward by eps moves the (2, 4) class to (2+eps, 4+2eps)
    eps = 0.1
    scaled = [(x * (1 + eps / 2), y * (1 + eps / 2)) for x, y in RING]
    d = bottleneck_distance(diagram_h1(RING, 5), diagram_h1(scaled, 5))
    assert d == pytest.approx(2 * eps)
