#!/usr/bin/env python3
'''
Exhaustive search for the global k-means optimum of tiny datasets.

Set partitions into exactly k blocks are enumerated as restricted
growth strings: point 0 is in block 0 and each next point joins a
used block or opens the next one.  Per block counts, coordinate sums
and squared norm sums are carried along so a complete string costs

    Q = sum_j (S2_j - |S1_j|^2 / n_j)

without revisiting the points.  The frontier is expanded depth first
in bounded chunks.
'''

import logging
from collections import namedtuple

import numpy

from wellclust.geometry import Partition, cost_centroid

log = logging.getLogger(__name__)


class OracleRefusal(ValueError):
    '''
    The dataset is too large to enumerate.
    '''


class OracleResult(namedtuple("OracleResult", "best_partition best_cost partitions_examined")):
    '''
    :param Partition best_partition: a minimum cost partition, the
        lexicographically smallest label string among equal costs.
    :param float best_cost: its k-means cost.
    :param int partitions_examined: number of partitions costed.
    '''
    __slots__ = ()


def stirling2(n, k):
    '''
    Return the number of partitions of n items into k non-empty blocks.
    '''
    if k < 0 or n < 0:
        raise ValueError(f'need non-negative n and k, got {n} and {k}')
    row = [1] + [0]*k
    for i in range(1, n+1):
        new = [0]*(k+1)
        for j in range(1, min(i, k)+1):
            new[j] = j*row[j] + row[j-1]
        row = new
    return row[k]


class _Frontier(namedtuple("_Frontier", "labels counts sums sq used")):
    __slots__ = ()

    def __len__(self):
        return self.labels.shape[0]

    def split(self, size):
        for beg in range(0, len(self), size):
            yield _Frontier(*[a[beg:beg+size] for a in self])


def _expand(front, point, remaining, k):
    '''
    Extend every string of front by one point, keeping only strings
    that can still fill all k blocks.
    '''
    out = list()
    rows = numpy.arange(len(front))
    for c in range(k):
        new_used = numpy.maximum(front.used, c+1)
        ok = (c <= front.used) & (new_used + remaining >= k)
        if not ok.any():
            continue
        sel = rows[ok]
        labels = numpy.column_stack([front.labels[sel], numpy.full(sel.size, c)])
        counts = front.counts[sel].copy()
        sums = front.sums[sel].copy()
        sq = front.sq[sel].copy()
        counts[:, c] += 1
        sums[:, c] += point
        sq[:, c] += point @ point
        out.append(_Frontier(labels, counts, sums, sq, new_used[sel]))
    return _Frontier(*[numpy.concatenate(parts) for parts in zip(*out)])


def _leaf_costs(front):
    return (front.sq - (front.sums**2).sum(axis=2)/front.counts).sum(axis=1)


class _Best(object):
    def __init__(self):
        self.cost = numpy.inf
        self.labels = None
        self.examined = 0

    def offer(self, front):
        costs = _leaf_costs(front)
        self.examined += len(costs)
        low = costs.min()
        tie = numpy.flatnonzero(costs <= low + 1e-12*max(1.0, abs(low)))
        cand = front.labels[tie]
        first = cand[numpy.lexsort(cand.T[::-1])[0]]
        tol = 1e-12*max(1.0, abs(self.cost)) if numpy.isfinite(self.cost) else 0
        if low < self.cost - tol:
            self.cost, self.labels = low, first
        elif abs(low - self.cost) <= tol and tuple(first) < tuple(self.labels):
            self.labels = first


def brute_force_optimal(dataset, k, max_n=14, chunk=1 << 16):
    '''
    Return the OracleResult for the best partition of dataset into k
    clusters.

    Raises OracleRefusal if the dataset has more than max_n points.
    '''
    n = dataset.n
    if n > max_n:
        raise OracleRefusal(f'refusing to enumerate {stirling2(n, k) if 1 <= k <= n else "all"} '
                            f'partitions of {n} > {max_n} points')
    if int(k) != k or not 1 <= k <= n:
        raise ValueError(f'k must lie in [1,{n}], got {k}')

    pts = dataset.points - dataset.points.mean(axis=0)
    d = dataset.dim
    counts = numpy.zeros((1, k), dtype='int64')
    sums = numpy.zeros((1, k, d))
    sq = numpy.zeros((1, k))
    counts[0, 0] = 1
    sums[0, 0] = pts[0]
    sq[0, 0] = pts[0] @ pts[0]
    root = _Frontier(numpy.zeros((1, 1), dtype='int64'), counts, sums, sq,
                     numpy.ones(1, dtype='int64'))

    best = _Best()
    stack = [(root, 1)]
    while stack:
        front, point = stack.pop()
        if point == n:
            best.offer(front)
            continue
        nxt = _expand(front, pts[point], n - point - 1, k)
        for part in reversed(list(nxt.split(chunk))):
            stack.append((part, point+1))
        log.debug(f'oracle: {len(nxt)} strings at depth {point+1}')

    part = Partition(best.labels, k)
    log.info(f'oracle examined {best.examined} partitions of {n} points')
    return OracleResult(part, cost_centroid(dataset, part), best.examined)
