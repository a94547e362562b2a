#!/usr/bin/env python3
'''
Synthetic datasets with known structure.

- planted datasets whose planted partition is well clusterable, with
  the plain gap or with separated cores and a few stragglers

- a thin ring whose distance histogram is multimodal although it has
  no cluster structure

- an unbalanced pair of clusters where a huge gap still does not make
  the gap partition the k-means optimum
'''

import math
import logging
from collections import namedtuple

import numpy
from scipy.spatial.distance import pdist
from scipy.stats import special_ortho_group

from wellclust.geometry import Dataset, Partition, cost_centroid
from wellclust.engine import make_rng
from wellclust import verifier

log = logging.getLogger(__name__)

# relative headroom added to planted gaps to absorb rounding
GAP_GUARD = 1e-9

# attempts at widening the layout before giving up
MAX_WIDEN = 8


class PlantedDataset(namedtuple("PlantedDataset",
                                "dataset planted_partition planted_centers per_cluster_radius "
                                "realized_min_gap required_gap margin p_frak core_radii "
                                "straggler_fraction")):
    '''
    :param Dataset dataset: the points.
    :param Partition planted_partition: the ground truth.
    :param numpy.ndarray planted_centers: (k,d) cluster centers.
    :param tuple per_cluster_radius: enclosing radius of each cluster.
    :param float realized_min_gap: measured smallest (core) gap.
    :param float required_gap: the bound it was built to meet.
    :param float margin: realized_min_gap >= margin*required_gap.
    :param float p_frak: straggler fraction, None for plain datasets.
    :param tuple core_radii: core radius per cluster, core datasets only.
    :param tuple straggler_fraction: realized share of each cluster's
        cost carried by stragglers, core datasets only.
    '''
    __slots__ = ()


class CounterexampleReport(namedtuple("CounterexampleReport",
                                      "dataset gap_partition alternative_partition Q_gap Q_alt "
                                      "V_d x3_lower_bound r gap_multiple threshold_ratio "
                                      "subgroup_offset premise_met succeeded")):
    '''
    :param Dataset dataset: the points.
    :param Partition gap_partition: big cluster and small cluster.
    :param Partition alternative_partition: big cluster split in two
        with the near half merged with the small cluster.
    :param float Q_gap: cost of the gap partition.
    :param float Q_alt: cost of the alternative.
    :param float V_d: largest single axis variance of the big cluster.
    :param float x3_lower_bound: V_d/(3r).
    :param float r: big cluster radius.
    :param float gap_multiple: surface gap in units of r.
    :param float threshold_ratio: n_big/n_small beyond which point
        masses beat the gap partition, gap_multiple^2 - 2.
    :param float subgroup_offset: distance of each big cluster subgroup
        center from the big cluster centroid.
    :param bool premise_met: gap_multiple >= 4.
    :param bool succeeded: Q_alt < Q_gap.
    '''
    __slots__ = ()


class Histogram(namedtuple("Histogram", "bin_edges counts")):
    '''
    :param numpy.ndarray bin_edges: bins+1 increasing edges.
    :param numpy.ndarray counts: pair count per bin.
    '''
    __slots__ = ()


def uniform_ball(rng, count, dim, radius):
    '''
    Return (count,dim) offsets drawn uniformly from a ball.
    '''
    dirs = rng.normal(size=(count, dim))
    norms = numpy.linalg.norm(dirs, axis=1)
    norms[norms == 0] = 1.0
    scale = radius * rng.uniform(size=count)**(1.0/dim)
    return dirs * (scale/norms)[:, None]


def _tight_ball(rng, count, dim, radius):
    '''
    Return offsets with zero mean whose largest norm is exactly radius.
    '''
    if count == 1 or radius == 0:
        return numpy.zeros((count, dim))
    off = uniform_ball(rng, count, dim, radius)
    off -= off.mean(axis=0)
    far = numpy.linalg.norm(off, axis=1).max()
    if far == 0:
        return off
    return off * (radius/far)


def _layout(k, dim, spacing, rng, line=False):
    '''
    Return (k,dim) centers with all mutual distances at least spacing.

    A regular simplex is used when it fits, else a line.  A random
    rotation follows in 2 or more dimensions.  With line=True the
    centers sit on the first axis exactly spacing apart, unrotated.
    '''
    if dim >= k-1 and not line:
        u, s, _ = numpy.linalg.svd(numpy.eye(k) - 1.0/k)
        simplex = u[:, :k-1] * s[:k-1]
        centers = numpy.zeros((k, dim))
        centers[:, :k-1] = simplex * (spacing/math.sqrt(2))
    else:
        centers = numpy.zeros((k, dim))
        centers[:, 0] = spacing * (numpy.arange(k) - (k-1)/2)
    if dim >= 2 and not line:
        rot = special_ortho_group.rvs(dim, random_state=rng)
        centers = centers @ rot.T
    return centers


def _place_on_line(place, spacing):
    '''
    Call place() with centers on a line spacing apart and return its
    (centers, dataset, verdict).
    '''
    log.warning(f'no layout after {MAX_WIDEN} widenings, placing centers on a line {spacing} apart')
    centers, ds, verdict = place(spacing, line=True)
    if not verdict.well_clusterable:
        short = verdict.margin*verdict.required_gap.g_required - verdict.measured_min_gap
        raise RuntimeError(f'collinear layout at spacing {spacing} misses the gap by {short}')
    return centers, ds, verdict


def _common(k, cardinalities, radii, dim, margin):
    if int(k) != k or k < 2:
        raise ValueError(f'planted datasets need an integer k >= 2, got {k}')
    if dim < 1:
        raise ValueError(f'dim must be at least 1, got {dim}')
    if margin < 1:
        raise ValueError(f'margin must be at least 1, got {margin}')
    card = [int(c) for c in cardinalities]
    if len(card) != k or min(card) < 1:
        raise ValueError(f'need {k} cardinalities of at least 1, got {card}')
    rad = numpy.broadcast_to(numpy.asarray(radii, dtype='float64'), (k,)).copy()
    if numpy.any(rad < 0):
        raise ValueError(f'radii must be non-negative, got {rad.tolist()}')
    return card, rad


def gen_well_clusterable(k, cardinalities, radii, dim, margin=1.0, rng_seed=0):
    '''
    Return a PlantedDataset whose planted partition meets the plain
    gap requirement scaled by margin.

    The radii may be one number for all clusters.  Each cluster's
    centroid is its planted center and one of its points lies exactly
    at its radius.
    '''
    card, rad = _common(k, cardinalities, radii, dim, margin)
    rng = make_rng(rng_seed)
    r_max = float(rad.max())
    req = verifier.required_gap_plain(k, card, r_max).g_required
    spacing = (2*r_max + margin*req) * (1 + GAP_GUARD) or 1.0
    labels = numpy.repeat(numpy.arange(k), card)
    part = Partition(labels, k)

    def place(spacing, line=False):
        centers = _layout(k, dim, spacing, rng, line)
        pts = numpy.vstack([c + _tight_ball(rng, n, dim, r)
                            for c, n, r in zip(centers, card, rad)])
        ds = Dataset(pts)
        return centers, ds, verifier.verify(ds, part, 'plain', margin=margin)

    for attempt in range(MAX_WIDEN):
        centers, ds, verdict = place(spacing)
        if verdict.well_clusterable:
            break
        short = margin*verdict.required_gap.g_required - verdict.measured_min_gap
        log.debug(f'planted gap short by {short}, widening')
        spacing += short + GAP_GUARD*spacing
    else:
        centers, ds, verdict = _place_on_line(place, spacing)

    log.info(f'planted {k} clusters, min gap {verdict.measured_min_gap} '
             f'for required {verdict.required_gap.g_required}')
    return PlantedDataset(ds, part, centers, tuple(rad.tolist()),
                          verdict.measured_min_gap, verdict.required_gap.g_required,
                          margin, None, None, None)


def _straggler_plan(core_cost, p_frak, core_radius, pairs):
    '''
    Return (pairs, distance) for antipodal straggler pairs carrying
    most of the cost budget a core may leave outside.
    '''
    budget = 0.9 * p_frak/(1-p_frak) * core_cost
    while pairs > 0 and budget > 0:
        dist = math.sqrt(budget/(2*pairs))
        if dist > core_radius*(1 + 1e-6):
            return pairs, dist
        pairs -= 1
    return 0, 0.0


def gen_core_clusterable(k, cardinalities, radii, dim, p_frak, margin=1.0, rng_seed=0,
                         stragglers=1):
    '''
    Return a PlantedDataset whose clusters have cores meeting the core
    gap requirement scaled by margin.

    The cardinalities and radii describe the cores.  Each cluster gets
    up to `stragglers` antipodal pairs of points outside its core,
    pointing toward the nearest other cluster and carrying most of the
    p_frak cost budget.  Pairs are dropped when the budget cannot push
    them beyond the core radius.  Full enclosing balls stay at least
    twice the largest core radius apart.
    '''
    card, rad = _common(k, cardinalities, radii, dim, margin)
    if not 0 <= p_frak < 1:
        raise ValueError(f'p_frak must lie in [0,1), got {p_frak}')
    if stragglers < 0:
        raise ValueError(f'stragglers must be non-negative, got {stragglers}')
    rng = make_rng(rng_seed)

    cores = [_tight_ball(rng, n, dim, r) for n, r in zip(card, rad)]
    plans = [_straggler_plan(float((c**2).sum()), p_frak, r, stragglers)
             for c, r in zip(cores, rad)]
    for j, (pairs, _) in enumerate(plans):
        if pairs < stragglers:
            log.warning(f'cluster {j}: straggler pairs reduced from {stragglers} to {pairs}')
    reach = numpy.array([max(r, dist) for r, (_, dist) in zip(rad, plans)])

    rc_max = float(rad.max())
    req = verifier.required_gap_core(k, card, [rc_max]*k, p_frak).g_required
    spacing = max(2*rc_max + margin*req, 2*reach.max() + 2*rc_max) * (1 + GAP_GUARD) or 1.0

    counts = [n + 2*pairs for n, (pairs, _) in zip(card, plans)]
    part = Partition(numpy.repeat(numpy.arange(k), counts), k)

    def place(spacing, line=False):
        centers = _layout(k, dim, spacing, rng, line)
        blocks = list()
        for j, (core, (pairs, dist)) in enumerate(zip(cores, plans)):
            blocks.append(centers[j] + core)
            if pairs:
                others = numpy.delete(centers, j, axis=0) - centers[j]
                v = others[numpy.argmin(numpy.linalg.norm(others, axis=1))]
                v = dist * v/numpy.linalg.norm(v)
                blocks.append(centers[j] + numpy.repeat([v, -v], pairs, axis=0))
        ds = Dataset(numpy.vstack(blocks))
        return centers, ds, verifier.verify(ds, part, 'core', p_frak, margin)

    for attempt in range(MAX_WIDEN):
        centers, ds, verdict = place(spacing)
        if verdict.well_clusterable:
            break
        short = margin*verdict.required_gap.g_required - verdict.measured_min_gap
        log.debug(f'planted core gap short by {short}, widening')
        spacing += max(short, 0) + GAP_GUARD*spacing
    else:
        centers, ds, verdict = _place_on_line(place, spacing)

    fractions = list()
    for core, (pairs, dist) in zip(cores, plans):
        outside = 2*pairs*dist*dist
        total = float((core**2).sum()) + outside
        fractions.append(outside/total if total else 0.0)

    log.info(f'planted {k} cored clusters, min core gap {verdict.measured_min_gap} '
             f'for required {verdict.required_gap.g_required}')
    return PlantedDataset(ds, part, centers, tuple(reach.tolist()),
                          verdict.measured_min_gap, verdict.required_gap.g_required,
                          margin, p_frak, tuple(rad.tolist()), tuple(fractions))


def gen_ring(n, ring_radius, thickness, rng_seed=0):
    '''
    Return a Dataset of n points on a 2D annulus around the origin,
    uniform in angle and in radius.
    '''
    if n < 3:
        raise ValueError(f'a ring needs at least 3 points, got {n}')
    if not 0 <= thickness < ring_radius:
        raise ValueError(f'need 0 <= thickness < ring_radius, got {thickness} and {ring_radius}')
    rng = make_rng(rng_seed)
    theta = rng.uniform(0, 2*math.pi, size=n)
    rad = ring_radius + thickness*(rng.uniform(size=n) - 0.5)
    return Dataset(numpy.column_stack([rad*numpy.cos(theta), rad*numpy.sin(theta)]))


def distance_histogram(dataset, bins=50):
    '''
    Return Histogram of all pairwise distances over [0, max distance].
    '''
    if dataset.n < 2:
        raise ValueError(f'need at least 2 points, got {dataset.n}')
    if bins < 2:
        raise ValueError(f'need at least 2 bins, got {bins}')
    dist = pdist(dataset.points)
    top = float(dist.max()) or 1.0
    counts, edges = numpy.histogram(dist, bins=bins, range=(0.0, top))
    return Histogram(edges, counts)


def local_maxima(counts):
    '''
    Return the first bin index of each plateau of counts that is
    strictly higher than the plateaus next to it.  An edge plateau has
    one neighbor.  A flat histogram has no maxima.
    '''
    counts = numpy.asarray(counts)
    if counts.size == 0:
        return []
    starts = numpy.flatnonzero(numpy.r_[True, counts[1:] != counts[:-1]])
    levels = counts[starts]
    if len(levels) < 2:
        return []
    left = numpy.r_[-numpy.inf, levels[:-1]]
    right = numpy.r_[levels[1:], -numpy.inf]
    return starts[(levels > left) & (levels > right)].tolist()


def gen_unbalanced_counterexample(r, gap_multiple, n_big, n_small, rng_seed=0, dim=1, spread=0.0):
    '''
    Return a CounterexampleReport for a big cluster of radius r and a
    small point mass at a surface gap of gap_multiple*r.

    The big cluster is two antipodal subgroups of n_big/2 points at
    distance (1-spread)*r from its centroid, each jittered within
    spread*r.  With spread=0 they are point masses at +-r.  The small
    cluster lies on the positive first axis.
    '''
    if r <= 0:
        raise ValueError(f'r must be positive, got {r}')
    if gap_multiple <= 0:
        raise ValueError(f'gap_multiple must be positive, got {gap_multiple}')
    if n_big < 2 or n_big % 2:
        raise ValueError(f'n_big must be even and at least 2, got {n_big}')
    if n_small < 1:
        raise ValueError(f'n_small must be at least 1, got {n_small}')
    if not 0 <= spread <= 0.5:
        raise ValueError(f'spread must lie in [0,0.5], got {spread}')
    if dim < 1:
        raise ValueError(f'dim must be at least 1, got {dim}')

    premise = gap_multiple >= 4
    if not premise:
        log.warning(f'gap multiple {gap_multiple} is below 4, the premise of the construction')

    rng = make_rng(rng_seed)
    half = n_big // 2
    axis = numpy.zeros(dim)
    axis[0] = 1.0
    offset = (1-spread)*r
    jitter = uniform_ball(rng, half, dim, spread*r) if spread else numpy.zeros((half, dim))
    near = offset*axis + jitter
    far = -near
    small = numpy.tile((1+gap_multiple)*r*axis, (n_small, 1))
    ds = Dataset(numpy.vstack([far, near, small]))

    gap_part = Partition(numpy.repeat([0, 1], [n_big, n_small]), 2)
    alt_part = Partition(numpy.repeat([0, 1, 1], [half, half, n_small]), 2)
    q_gap = cost_centroid(ds, gap_part)
    q_alt = cost_centroid(ds, alt_part)

    big = ds.points[:n_big]
    v_d = float(big.var(axis=0).max())
    threshold = gap_multiple**2 - 2
    ok = q_alt < q_gap
    if not ok:
        log.warning(f'n_big/n_small = {n_big/n_small} does not defeat the gap partition: '
                    f'Q_gap={q_gap} Q_alt={q_alt}')
    else:
        log.info(f'gap partition beaten: Q_gap={q_gap} Q_alt={q_alt}')
    return CounterexampleReport(ds, gap_part, alt_part, q_gap, q_alt, v_d, v_d/(3*r),
                                float(r), float(gap_multiple), threshold,
                                float(numpy.linalg.norm(near.mean(axis=0))), premise, ok)
