#!/usr/bin/env pytest

import math
import numpy
import pytest

from wellclust.geometry import (Dataset, Partition, InvalidPartition, ClusterStats,
                                same_partition, centroids, assign, compute_stats,
                                cost_centroid, cost_pairwise, cluster_diameter, gap_report)

square = Dataset([(0, 0), (0, 1), (10, 0), (10, 1)])
left_right = Partition([0, 0, 1, 1])


def random_instance(rng):
    n = int(rng.integers(1, 201))
    d = int(rng.integers(1, 11))
    k = int(rng.integers(1, min(8, n) + 1))
    labels = numpy.concatenate([numpy.arange(k), rng.integers(k, size=n-k)])
    rng.shuffle(labels)
    pts = rng.normal(scale=rng.uniform(0.1, 10), size=(n, d))
    return Dataset(pts), Partition(labels, k)


def test_dataset():
    ds = Dataset([1.0, 2.0, 3.0])
    assert ds.n == 3
    assert ds.dim == 1
    with pytest.raises(ValueError):
        Dataset([(0, numpy.nan)])
    with pytest.raises(ValueError):
        Dataset(numpy.zeros((0, 2)))
    with pytest.raises(ValueError):
        ds.points[0, 0] = 5


def test_partition():
    with pytest.raises(InvalidPartition, match="empty clusters"):
        Partition([0, 0, 2], 3)
    with pytest.raises(InvalidPartition):
        Partition([0, 1, 3], 3)
    with pytest.raises(InvalidPartition):
        Partition([0, 0.5])
    with pytest.raises(InvalidPartition, match="labels for"):
        cost_centroid(square, Partition([0, 1, 1]))
    assert Partition([0, 1, 1]).k == 2
    assert list(Partition([0, 1, 1]).cardinalities) == [1, 2]


def test_same_partition():
    assert same_partition(Partition([2, 2, 0, 1]), Partition([0, 0, 1, 2]))
    assert not same_partition(Partition([0, 1, 0, 1]), left_right)
    assert list(Partition([2, 2, 0, 1]).canonical().labels) == [0, 0, 1, 2]


def test_stats_examples():
    st, = compute_stats(Dataset([(0, 0), (2, 0)]), Partition([0, 0]))
    assert numpy.allclose(st.centroid, (1, 0))
    assert st.enclosing_radius == 1
    assert st.variance == 1
    assert st.cardinality == 2

    st, = compute_stats(Dataset([(3, 4)]), Partition([0]))
    assert numpy.allclose(st.centroid, (3, 4))
    assert st.enclosing_radius == 0
    assert st.variance == 0

    st, = compute_stats(Dataset([(0, 0), (0, 3), (3, 0)]), Partition([0, 0, 0]))
    assert numpy.allclose(st.centroid, (1, 1))
    assert st.enclosing_radius == pytest.approx(math.sqrt(5), rel=1e-12)


def test_cost_examples():
    pair = Dataset([(0, 0), (2, 0)])
    assert cost_centroid(pair, Partition([0, 0])) == 2
    assert cost_pairwise(pair, Partition([0, 0])) == 2
    assert cost_centroid(pair, Partition([0, 1])) == 0
    assert cost_pairwise(pair, Partition([0, 1])) == 0
    assert cost_centroid(square, left_right) == pytest.approx(1.0, rel=1e-12)
    assert cost_pairwise(square, left_right) == pytest.approx(1.0, rel=1e-12)


def test_cost_forms_agree():
    rng = numpy.random.default_rng(20240601)
    for _ in range(500):
        ds, part = random_instance(rng)
        assert cost_pairwise(ds, part) == pytest.approx(cost_centroid(ds, part), rel=1e-9, abs=1e-12)


def test_cost_translation_and_scale():
    rng = numpy.random.default_rng(7)
    for _ in range(50):
        ds, part = random_instance(rng)
        q = cost_centroid(ds, part)
        shift = rng.normal(scale=100, size=ds.dim)
        moved = Dataset(ds.points + shift)
        assert cost_centroid(moved, part) == pytest.approx(q, rel=1e-9, abs=1e-9)
        assert cost_pairwise(moved, part) == pytest.approx(q, rel=1e-9, abs=1e-9)
        s = rng.uniform(0.1, 10)
        scaled = Dataset(ds.points * s)
        assert cost_centroid(scaled, part) == pytest.approx(s*s*q, rel=1e-9, abs=1e-12)


def test_radius_bounds():
    rng = numpy.random.default_rng(11)
    for _ in range(50):
        ds, part = random_instance(rng)
        for j, st in enumerate(compute_stats(ds, part)):
            assert st.variance <= st.enclosing_radius**2 * (1 + 1e-12)
            assert st.enclosing_radius <= cluster_diameter(ds, part, j) * (1 + 1e-12)
            if st.cardinality == 1:
                assert st.enclosing_radius == 0


def test_centroids_and_assign():
    mu = centroids(square, left_right)
    assert numpy.allclose(mu, [(0, 0.5), (10, 0.5)])
    assert list(assign(square.points, mu)) == [0, 0, 1, 1]
    # equidistant goes to the lower index
    assert list(assign([(5, 0.5)], mu)) == [0]


def test_gap_report():
    stats = [ClusterStats(numpy.array((0.0, 0.0)), 1, 2.0, 0.0),
             ClusterStats(numpy.array((10.0, 0.0)), 1, 3.0, 0.0)]
    rep = gap_report(stats)
    assert rep.min_gap == pytest.approx(5)
    assert rep.pairs() == [(0, 1, pytest.approx(5))]

    same = [ClusterStats(numpy.zeros(2), 1, 1.0, 0.0), ClusterStats(numpy.zeros(2), 1, 2.0, 0.0)]
    assert gap_report(same).min_gap == -3

    tri = [ClusterStats(numpy.array(c), 1, 0.0, 0.0)
           for c in [(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3)/2)]]
    rep = gap_report(tri)
    assert rep.min_gap == pytest.approx(1, rel=1e-12)
    off = rep.pair_gaps[~numpy.eye(3, dtype=bool)]
    assert numpy.allclose(off, 1)
    assert numpy.allclose(rep.pair_gaps, rep.pair_gaps.T, equal_nan=True)

    with pytest.raises(ValueError):
        gap_report(tri[:1])
