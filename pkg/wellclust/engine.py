#!/usr/bin/env python3
'''
Lloyd's k-means, k-means++ seeding and a multi-restart driver.

Randomness comes from numpy's PCG64 bit generator seeded through a
SeedSequence built from the user seed and a stream index, so run r of
a multi-restart is reproducible on its own and on any platform.
'''

import logging
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy
from scipy.spatial.distance import cdist

from wellclust.geometry import Partition, assign, cost_centroid

log = logging.getLogger(__name__)


def make_rng(seed, *stream):
    '''
    Return a numpy Generator for the given seed and stream indices.
    '''
    entropy = [int(seed)] + [int(s) for s in stream]
    if any(e < 0 for e in entropy):
        raise ValueError(f'seeds must be non-negative integers, got {entropy}')
    return numpy.random.Generator(numpy.random.PCG64(numpy.random.SeedSequence(entropy)))


class SeedSet(namedtuple("SeedSet", "centers source_indices")):
    '''
    :param numpy.ndarray centers: (k,d) initial centers.
    :param numpy.ndarray source_indices: dataset index of each center.
    '''
    __slots__ = ()


class RunResult(namedtuple("RunResult", "partition cost iterations seed centers costs run")):
    '''
    :param Partition partition: final assignment.
    :param float cost: k-means cost of the final partition.
    :param int iterations: number of assignment+update steps taken.
    :param SeedSet seed: the initial centers (None if given directly).
    :param numpy.ndarray centers: final centroids.
    :param tuple costs: cost after each iteration.
    :param int run: restart index within a multi-restart.
    '''
    __slots__ = ()


def seed_kmeanspp(dataset, k, rng_seed, run=0):
    '''
    Choose k distinct data points as k-means++ seeds.

    The first is uniform, each next is drawn with probability
    proportional to the squared distance to its nearest chosen seed.
    If all remaining weight is zero the next seed is uniform among the
    points not yet chosen.
    '''
    n = dataset.n
    if k < 1 or k > n:
        raise ValueError(f'k must lie in [1,{n}], got {k}')
    rng = make_rng(rng_seed, run)
    pts = dataset.points

    chosen = [int(rng.integers(n))]
    d2 = cdist(pts, pts[chosen], 'sqeuclidean')[:, 0]
    while len(chosen) < k:
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2/total))
        else:
            left = numpy.setdiff1d(numpy.arange(n), chosen)
            if left.size == 0:
                raise ValueError('no points left to seed')
            log.warning(f'k-means++ weights vanished after {len(chosen)} seeds, choosing uniformly')
            nxt = int(rng.choice(left))
        chosen.append(nxt)
        d2 = numpy.minimum(d2, cdist(pts, pts[[nxt]], 'sqeuclidean')[:, 0])

    idx = numpy.array(chosen)
    return SeedSet(pts[idx].copy(), idx)


def _update(points, labels, k):
    sums = numpy.zeros((k, points.shape[1]))
    numpy.add.at(sums, labels, points)
    counts = numpy.bincount(labels, minlength=k)
    return sums / counts[:, None]


def _repair_empty(points, centers, labels):
    '''
    Give each empty cluster the point farthest from its nearest center,
    taken from a cluster that can spare it.
    '''
    k = len(centers)
    labels = labels.copy()
    while True:
        counts = numpy.bincount(labels, minlength=k)
        empty = numpy.flatnonzero(counts == 0)
        if not empty.size:
            return labels
        j = empty[0]
        d2 = ((points - centers[labels])**2).sum(axis=1)
        d2[counts[labels] < 2] = -1
        far = int(numpy.argmax(d2))
        log.warning(f'center {j} lost all members, moving it to point {far}')
        labels[far] = j
        centers[j] = points[far]


def lloyd(dataset, initial_centers, max_iters=100, tol=1e-10, callback=None):
    '''
    Run Lloyd iterations from initial_centers and return a RunResult.

    Stops when membership is unchanged or after max_iters iterations.
    Once no center moves more than tol the membership is checked
    against a fresh assignment and the run stops if it holds, so a
    run that ends before max_iters is always a Lloyd fixed point.  No
    cluster is left empty.

    If given, callback(iteration, centers, labels) is called after each
    iteration with the updated centers.
    '''
    pts = dataset.points
    centers = numpy.array(initial_centers, dtype='float64')
    if centers.ndim == 1:
        centers = centers.reshape(-1, 1)
    k = len(centers)
    if k < 1 or k > dataset.n:
        raise ValueError(f'need 1 <= k <= {dataset.n} centers, got {k}')
    if centers.shape[1] != dataset.dim:
        raise ValueError(f'centers have dim {centers.shape[1]}, dataset has {dataset.dim}')
    if max_iters < 1:
        raise ValueError(f'max_iters must be at least 1, got {max_iters}')

    labels = None
    costs = list()
    for iteration in range(1, max_iters+1):
        new_labels = _repair_empty(pts, centers, assign(pts, centers))
        new_centers = _update(pts, new_labels, k)
        cost = float(((pts - new_centers[new_labels])**2).sum())
        if costs:
            assert cost <= costs[-1] * (1 + 1e-9) + 1e-12, \
                f'cost rose from {costs[-1]} to {cost} at iteration {iteration}'
        costs.append(cost)
        log.debug(f'lloyd iteration {iteration}: cost {cost}')

        changed = labels is None or numpy.any(new_labels != labels)
        shift = numpy.sqrt(((new_centers - centers)**2).sum(axis=1)).max()
        labels, centers = new_labels, new_centers
        if callback:
            callback(iteration, centers, labels)
        if not changed:
            break
        if shift <= tol:
            fresh = _repair_empty(pts, centers.copy(), assign(pts, centers))
            if numpy.array_equal(fresh, labels):
                break

    part = Partition(labels, k)
    return RunResult(part, cost_centroid(dataset, part), iteration,
                     None, centers, tuple(costs), 0)


def kmeanspp(dataset, k, rng_seed, run=0, max_iters=100, tol=1e-10):
    '''
    One k-means++ run: seed then Lloyd.
    '''
    seed = seed_kmeanspp(dataset, k, rng_seed, run)
    res = lloyd(dataset, seed.centers, max_iters, tol)
    return res._replace(seed=seed, run=run)


def multi_restart(dataset, k, repetitions, rng_seed, max_iters=100, tol=1e-10, workers=1):
    '''
    Return the lowest cost RunResult over independent k-means++ runs.

    Run r draws from stream r of rng_seed.  Equal costs go to the
    lower run index.  Errors in some runs are logged and skipped; if
    every run fails the last error is raised.
    '''
    if repetitions < 1:
        raise ValueError(f'repetitions must be at least 1, got {repetitions}')

    def one(run):
        try:
            return kmeanspp(dataset, k, rng_seed, run, max_iters, tol)
        except (ValueError, AssertionError) as err:
            log.warning(f'restart {run} failed: {err}')
            return err

    runs = range(repetitions)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, runs))
    else:
        results = [one(run) for run in runs]

    good = [r for r in results if isinstance(r, RunResult)]
    if not good:
        raise results[-1]
    for res in good:
        log.debug(f'restart {res.run}: cost {res.cost} after {res.iterations} iterations')
    best = min(good, key=lambda r: (r.cost, r.run))
    log.info(f'best of {repetitions} restarts is run {best.run} with cost {best.cost}')
    return best
