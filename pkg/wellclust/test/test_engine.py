#!/usr/bin/env pytest

import numpy
import pytest

from wellclust.geometry import Dataset, Partition, same_partition, cost_centroid, centroids, assign
from wellclust.engine import make_rng, seed_kmeanspp, lloyd, kmeanspp, multi_restart
from wellclust.generators import gen_well_clusterable
from wellclust.analytics import p_seed_unbalanced, required_repetitions

square = Dataset([(0, 0), (0, 1), (10, 0), (10, 1)])


def two_blobs(rng, n=50, sep=100.0):
    a = rng.normal(scale=0.5, size=(n, 2))
    b = rng.normal(scale=0.5, size=(n, 2)) + (sep, 0)
    return Dataset(numpy.vstack([a, b])), Partition(numpy.repeat([0, 1], n))


def test_rng():
    a = make_rng(3, 1).uniform(size=4)
    b = make_rng(3, 1).uniform(size=4)
    c = make_rng(3, 2).uniform(size=4)
    assert numpy.all(a == b)
    assert not numpy.all(a == c)
    with pytest.raises(ValueError):
        make_rng(-1)


def test_seed_trivial():
    seeds = seed_kmeanspp(square, 4, 0)
    assert sorted(seeds.source_indices.tolist()) == [0, 1, 2, 3]
    assert numpy.all(seeds.centers == square.points[seeds.source_indices])
    one = seed_kmeanspp(square, 1, 5)
    assert len(one.source_indices) == 1
    with pytest.raises(ValueError):
        seed_kmeanspp(square, 5, 0)
    with pytest.raises(ValueError):
        seed_kmeanspp(square, 0, 0)


def test_seed_reproducible():
    a = seed_kmeanspp(square, 2, 42, 3)
    b = seed_kmeanspp(square, 2, 42, 3)
    assert numpy.all(a.source_indices == b.source_indices)
    assert numpy.all(a.centers == b.centers)


def test_seed_coincident_points():
    ds = Dataset([(1, 1)]*3 + [(2, 2)])
    seeds = seed_kmeanspp(ds, 3, 0)
    assert len(set(seeds.source_indices.tolist())) == 3


def test_seed_hits_both_blobs():
    ds, part = two_blobs(numpy.random.default_rng(1))
    hits = 0
    for trial in range(1000):
        seeds = seed_kmeanspp(ds, 2, 9, trial)
        if len(set(part.labels[seeds.source_indices].tolist())) == 2:
            hits += 1
    assert hits >= 950


def test_lloyd_examples():
    res = lloyd(square, [(0, 0), (10, 0)])
    assert res.cost == pytest.approx(1.0, rel=1e-12)
    assert same_partition(res.partition, Partition([0, 0, 1, 1]))
    assert res.iterations >= 1

    single = lloyd(square, square.points)
    assert single.cost == 0
    assert single.iterations == 1

    ds, part = two_blobs(numpy.random.default_rng(2))
    res = lloyd(ds, centroids(ds, part))
    assert res.iterations <= 2
    assert same_partition(res.partition, part)


def test_lloyd_repairs_empty_cluster():
    ds = Dataset([(0, 0), (1, 0), (2, 0), (3, 0)])
    # the far center captures nothing on the first assignment
    res = lloyd(ds, [(0, 0), (1, 0), (100, 0)])
    assert res.partition.k == 3
    assert numpy.all(res.partition.cardinalities >= 1)


def test_lloyd_fixed_point_and_monotone():
    rng = numpy.random.default_rng(3)
    for trial in range(20):
        ds = Dataset(rng.normal(size=(60, 3)))
        res = kmeanspp(ds, 4, 5, trial)
        assert all(b <= a*(1+1e-9) for a, b in zip(res.costs, res.costs[1:]))
        assert res.cost == pytest.approx(cost_centroid(ds, res.partition), rel=1e-9)
        assert res.iterations < 100
        mu = centroids(ds, res.partition)
        assert numpy.all(assign(ds.points, mu) == res.partition.labels)


def test_lloyd_loose_tol_still_converges():
    rng = numpy.random.default_rng(6)
    for trial in range(20):
        ds = Dataset(rng.normal(size=(60, 2)))
        seeds = seed_kmeanspp(ds, 5, 8, trial)
        # every center shift is below this tol from the first iteration on
        res = lloyd(ds, seeds.centers, tol=1e6)
        assert res.iterations < 100
        mu = centroids(ds, res.partition)
        assert numpy.all(assign(ds.points, mu) == res.partition.labels)
        assert res.cost == pytest.approx(lloyd(ds, seeds.centers).cost, rel=1e-12)


def test_lloyd_callback_and_errors():
    seen = list()
    lloyd(square, [(0, 0), (10, 0)], callback=lambda i, c, l: seen.append(i))
    assert seen[0] == 1
    with pytest.raises(ValueError):
        lloyd(square, [(0, 0, 0)])
    with pytest.raises(ValueError):
        lloyd(square, [(0, 0)], max_iters=0)


def test_multi_restart_single_equals_run():
    ds = Dataset(numpy.random.default_rng(4).normal(size=(80, 2)))
    one = multi_restart(ds, 3, 1, 17)
    run = kmeanspp(ds, 3, 17)
    assert numpy.all(one.partition.labels == run.partition.labels)
    assert one.cost == run.cost


def test_multi_restart_prefix_and_determinism():
    ds = Dataset(numpy.random.default_rng(5).normal(size=(80, 2)))
    costs = [multi_restart(ds, 4, R, 23).cost for R in (1, 3, 6)]
    assert costs[0] >= costs[1] >= costs[2]
    a = multi_restart(ds, 4, 6, 23)
    b = multi_restart(ds, 4, 6, 23, workers=3)
    assert a.run == b.run
    assert numpy.all(a.partition.labels == b.partition.labels)
    with pytest.raises(ValueError):
        multi_restart(ds, 4, 0, 23)


def test_multi_restart_all_fail():
    with pytest.raises(ValueError):
        multi_restart(square, 5, 3, 0)


def test_multi_restart_recovers_planted():
    rng = numpy.random.default_rng(12)
    found = 0
    trials = 200
    for trial in range(trials):
        k = (2, 3, 5)[trial % 3]
        sizes = rng.integers(10, 600//k + 1, size=k).tolist()
        n, m, M = sum(sizes), min(sizes), max(sizes)
        planted = gen_well_clusterable(k, sizes, 1.0, 2, 1.0, trial)
        R = required_repetitions(p_seed_unbalanced(k, n, m, M), 0.95)
        res = multi_restart(planted.dataset, k, R, 1000 + trial)
        if same_partition(res.partition, planted.planted_partition):
            found += 1
    assert found >= 0.9*trials


def test_three_restarts_recover_planted():
    planted = gen_well_clusterable(3, [30, 30, 30], 1.0, 2, 1.0, 21)
    found = 0
    for trial in range(200):
        res = multi_restart(planted.dataset, 3, 3, 2000 + trial)
        if same_partition(res.partition, planted.planted_partition):
            found += 1
    assert found >= 190
