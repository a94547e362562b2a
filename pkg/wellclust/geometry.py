#!/usr/bin/env python3
'''
Data model and exact cost primitives for k-means.

A Dataset holds n points in d-dimensional Euclidean space as a
read-only (n,d) float64 array.  A Partition assigns each point one of
k cluster labels and every label in [0,k) must be used.

The k-means cost Q of a partition is available in both of its usual
forms:

    Q = sum_j sum_{x in C_j} |x - mu_j|^2                (centroid form)
      = sum_j 1/n_j sum_{i<l in C_j} |x_i - x_l|^2       (pairwise form)

The pairwise sum runs over unordered pairs.  Only that reading makes
the two forms equal.
'''

from collections import namedtuple

import numpy
from scipy.spatial.distance import pdist, cdist, squareform


class InvalidPartition(ValueError):
    '''
    A partition does not fit its dataset or leaves a cluster empty.
    '''


class Dataset(namedtuple("Dataset", "points")):
    '''
    :param numpy.ndarray points: (n,d) array of finite float64
        coordinates.  A 1D sequence is taken as n points in 1D.
    '''
    __slots__ = ()

    def __new__(cls, points):
        pts = numpy.array(points, dtype='float64')
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise ValueError(f'dataset must be 2D (n,d), got shape {pts.shape}')
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f'dataset needs n>=1 points of dim>=1, got shape {pts.shape}')
        if not numpy.all(numpy.isfinite(pts)):
            raise ValueError('dataset has non-finite coordinates')
        pts.setflags(write=False)
        return super().__new__(cls, pts)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


class Partition(namedtuple("Partition", "labels k")):
    '''
    :param numpy.ndarray labels: per-point cluster index in [0,k).
    :param int k: number of clusters.  Defaults to max(labels)+1.
    '''
    __slots__ = ()

    def __new__(cls, labels, k=None):
        lab = numpy.array(labels)
        if lab.ndim != 1 or lab.size == 0:
            raise InvalidPartition(f'labels must be a non-empty 1D sequence, got shape {lab.shape}')
        if not numpy.issubdtype(lab.dtype, numpy.integer):
            if not numpy.all(lab == numpy.round(lab)):
                raise InvalidPartition('labels must be integers')
        lab = lab.astype('int64')
        if k is None:
            k = int(lab.max()) + 1
        k = int(k)
        if k < 1:
            raise InvalidPartition(f'k must be positive, got {k}')
        if lab.min() < 0 or lab.max() >= k:
            raise InvalidPartition(f'labels must lie in [0,{k}), got [{lab.min()},{lab.max()}]')
        counts = numpy.bincount(lab, minlength=k)
        empty = numpy.flatnonzero(counts == 0)
        if empty.size:
            raise InvalidPartition(f'empty clusters: {empty.tolist()}')
        lab.setflags(write=False)
        return super().__new__(cls, lab, k)

    @property
    def n(self):
        return self.labels.size

    @property
    def cardinalities(self):
        return numpy.bincount(self.labels, minlength=self.k)

    def members(self, j):
        '''
        Return indices of points in cluster j.
        '''
        return numpy.flatnonzero(self.labels == j)

    def canonical(self):
        '''
        Return an equivalent partition with labels renumbered in order
        of first appearance.
        '''
        _, first = numpy.unique(self.labels, return_index=True)
        order = numpy.argsort(first)
        relabel = numpy.empty(self.k, dtype='int64')
        relabel[order] = numpy.arange(self.k)
        return Partition(relabel[self.labels], self.k)


def same_partition(a, b):
    '''
    Return True if partitions a and b group points identically,
    regardless of label numbering.
    '''
    if a.k != b.k or a.n != b.n:
        return False
    return bool(numpy.all(a.canonical().labels == b.canonical().labels))


def check_partition(dataset, partition):
    '''
    Raise InvalidPartition unless partition labels every point of dataset.
    '''
    if partition.n != dataset.n:
        raise InvalidPartition(f'partition has {partition.n} labels for {dataset.n} points')


class ClusterStats(namedtuple("ClusterStats", "centroid cardinality enclosing_radius variance")):
    '''
    :param numpy.ndarray centroid: arithmetic mean of members.
    :param int cardinality: number of members.
    :param float enclosing_radius: max member distance to centroid.
    :param float variance: mean squared member distance to centroid.
    '''
    __slots__ = ()


class GapReport(namedtuple("GapReport", "pair_gaps min_gap")):
    '''
    :param numpy.ndarray pair_gaps: (k,k) symmetric matrix of surface
        gaps |mu_p - mu_q| - r_p - r_q, NaN on the diagonal.
    :param float min_gap: smallest off-diagonal gap, negative when
        enclosing balls overlap.
    '''
    __slots__ = ()

    def pairs(self):
        '''
        Return list of (p, q, gap) for p < q.
        '''
        k = self.pair_gaps.shape[0]
        return [(p, q, float(self.pair_gaps[p, q]))
                for p in range(k) for q in range(p+1, k)]


def centroids(dataset, partition):
    '''
    Return (k,d) array of cluster centroids.
    '''
    check_partition(dataset, partition)
    sums = numpy.zeros((partition.k, dataset.dim))
    numpy.add.at(sums, partition.labels, dataset.points)
    return sums / partition.cardinalities[:, None]


def assign(points, centers):
    '''
    Return index of the nearest center for each point.

    Ties go to the lowest center index.
    '''
    d2 = cdist(numpy.atleast_2d(points), numpy.atleast_2d(centers), 'sqeuclidean')
    return numpy.argmin(d2, axis=1)


def compute_stats(dataset, partition):
    '''
    Return list of ClusterStats, one per cluster index.
    '''
    check_partition(dataset, partition)
    ret = list()
    for j in range(partition.k):
        members = dataset.points[partition.labels == j]
        centroid = members.mean(axis=0)
        d2 = ((members - centroid)**2).sum(axis=1)
        ret.append(ClusterStats(centroid, len(members),
                                float(numpy.sqrt(d2.max())), float(d2.mean())))
    return ret


def cost_centroid(dataset, partition):
    '''
    Return k-means cost as the sum of squared distances to centroids.
    '''
    mu = centroids(dataset, partition)
    diff = dataset.points - mu[partition.labels]
    return float((diff**2).sum())


def cost_pairwise(dataset, partition):
    '''
    Return k-means cost as per-cluster unordered pair sums of squared
    distances divided by cluster cardinality.

    Memory is quadratic in the largest cluster size.
    '''
    check_partition(dataset, partition)
    total = 0.0
    for j in range(partition.k):
        members = dataset.points[partition.labels == j]
        if len(members) < 2:
            continue
        total += pdist(members, 'sqeuclidean').sum() / len(members)
    return float(total)


def cluster_diameter(dataset, partition, j):
    '''
    Return the largest distance between two members of cluster j.
    '''
    members = dataset.points[partition.labels == j]
    if len(members) < 2:
        return 0.0
    return float(pdist(members).max())


def gap_report(stats):
    '''
    Return GapReport of surface gaps between enclosing balls.

    The stats may be any sequence of objects with .centroid and
    .enclosing_radius, such as ClusterStats.
    '''
    if len(stats) < 2:
        raise ValueError(f'gaps need at least 2 clusters, got {len(stats)}')
    mu = numpy.array([s.centroid for s in stats], dtype='float64')
    rad = numpy.array([s.enclosing_radius for s in stats], dtype='float64')
    dist = squareform(pdist(mu))
    gaps = dist - rad[:, None] - rad[None, :]
    numpy.fill_diagonal(gaps, numpy.nan)
    return GapReport(gaps, float(numpy.nanmin(gaps)))
