#!/usr/bin/env python3
'''
A posteriori checks that a partition certifies its data as well
clusterable.

In plain mode the smallest surface gap between the enclosing balls of
the clusters must meet two lower bounds, one controlling how balanced
the seeding is and one for every pair of clusters.  In core mode the
same is asked of the gaps between cluster cores, balls around the
cluster centroids that hold at least 1-p_frak of each cluster's cost,
with the bounds inflated by (1+p_frak)/(1-p_frak).
'''

import math
import logging
from collections import namedtuple

import numpy

from wellclust.geometry import (ClusterStats, check_partition, compute_stats,
                                gap_report, centroids, assign)

log = logging.getLogger(__name__)


class HypothesisViolation(ValueError):
    '''
    A configuration does not meet the hypotheses of a core theorem.
    '''


class GapRequirement(namedtuple("GapRequirement",
                                "g_balanced_bound g_pairwise_bound g_required pair_bounds "
                                "k n cardinalities radii M m p_frak")):
    '''
    :param float g_balanced_bound: the bound limiting seeding imbalance.
    :param float g_pairwise_bound: largest of the per pair bounds.
    :param float g_required: max of the two.
    :param numpy.ndarray pair_bounds: (k,k) per pair bounds, NaN diagonal.
    :param int k: number of clusters.
    :param int n: total number of points (or core points).
    :param tuple cardinalities: per cluster sizes.
    :param tuple radii: per cluster radii used in the bounds.
    :param int M: largest cardinality.
    :param int m: smallest cardinality.
    :param float p_frak: straggler fraction, None in plain mode.
    '''
    __slots__ = ()


class CoreProfile(namedtuple("CoreProfile",
                             "core_member_indices core_radius core_cardinality "
                             "achieved_fraction p_frak centroid")):
    '''
    :param numpy.ndarray core_member_indices: dataset indices in the core.
    :param float core_radius: radius of the core ball.
    :param int core_cardinality: number of core members.
    :param float achieved_fraction: core cost over cluster cost, both
        measured against the full cluster centroid.
    :param float p_frak: the requested straggler fraction.
    :param numpy.ndarray centroid: the full cluster centroid.
    '''
    __slots__ = ()


class ClusterabilityVerdict(namedtuple("ClusterabilityVerdict",
                                       "mode measured_min_gap required_gap well_clusterable "
                                       "per_pair_detail margin cores")):
    '''
    :param str mode: plain or core.
    :param float measured_min_gap: smallest gap between (core) balls.
    :param GapRequirement required_gap: the bounds compared against.
    :param bool well_clusterable: measured_min_gap >= margin*g_required.
    :param list per_pair_detail: (p, q, measured gap, pair bound) for p<q.
    :param float margin: multiplier applied to g_required.
    :param list cores: CoreProfile per cluster in core mode, else None.
    '''
    __slots__ = ()

    def to_dict(self):
        from wellclust.persist import todict
        return todict(self)


class CorePreservationConfig(namedtuple("CorePreservationConfig", "A B rho g core_radius")):
    '''
    Two clusters of enclosing radius rho around centers A and B with
    |A-B| = 2 rho + g.

    :param numpy.ndarray A: center of the first cluster.
    :param numpy.ndarray B: center of the second cluster.
    :param float rho: enclosing radius of both clusters.
    :param float g: gap between the enclosing balls.
    :param float core_radius: g/2 unless given.
    '''
    __slots__ = ()

    def __new__(cls, A, B, rho, g, core_radius=None):
        A = numpy.atleast_1d(numpy.array(A, dtype='float64'))
        B = numpy.atleast_1d(numpy.array(B, dtype='float64'))
        if core_radius is None:
            core_radius = g/2
        return super().__new__(cls, A, B, float(rho), float(g), float(core_radius))


def _pair_matrix(k, fn):
    out = numpy.full((k, k), numpy.nan)
    for p in range(k):
        for q in range(p+1, k):
            out[p, q] = out[q, p] = fn(p, q)
    return out


def _sizes(k, cardinalities):
    if int(k) != k or k < 2:
        raise ValueError(f'gap requirements need an integer k >= 2, got {k}')
    card = numpy.asarray(cardinalities, dtype='float64')
    if card.shape != (k,):
        raise ValueError(f'need {k} cardinalities, got {len(card)}')
    if numpy.any(card < 1):
        raise ValueError(f'cardinalities must be at least 1, got {card.tolist()}')
    return card, card.sum(), card.max(), card.min()


def required_gap_plain(k, cardinalities, r_max):
    '''
    Return the GapRequirement for clusters of the given sizes that all
    fit in balls of radius r_max.

    The pair bound is evaluated as the product

        k r sqrt(n_p/2 + n_q/2 + n/2) sqrt(2n/(n_p n_q))

    and asserted equal to its restated form k r sqrt(n(n_p+n_q+n)/(n_p n_q)).
    '''
    card, n, M, m = _sizes(k, cardinalities)
    if r_max < 0:
        raise ValueError(f'r_max must be non-negative, got {r_max}')

    balanced = r_max * math.sqrt(k*(M+n)/m)

    def pair(p, q):
        np_, nq = card[p], card[q]
        val = k*r_max * math.sqrt(np_/2 + nq/2 + n/2) * math.sqrt(2*n/(np_*nq))
        alt = k*r_max * math.sqrt(n*(np_+nq+n)/(np_*nq))
        assert math.isclose(val, alt, rel_tol=1e-12, abs_tol=1e-300), (val, alt)
        return val

    bounds = _pair_matrix(k, pair)
    pairwise = float(numpy.nanmax(bounds))
    return GapRequirement(balanced, pairwise, max(balanced, pairwise), bounds,
                          k, int(n), tuple(int(c) for c in card), (float(r_max),)*k,
                          int(M), int(m), None)


def required_gap_core(k, cardinalities, radii, p_frak):
    '''
    Return the GapRequirement for cores of the given sizes and radii
    when up to p_frak of each cluster's cost lies outside its core.
    '''
    card, n, M, m = _sizes(k, cardinalities)
    if not 0 <= p_frak < 1:
        raise ValueError(f'p_frak must lie in [0,1), got {p_frak}')
    rad = numpy.asarray(radii, dtype='float64')
    if rad.shape != (k,) or numpy.any(rad < 0):
        raise ValueError(f'need {k} non-negative radii, got {rad.tolist()}')

    infl = (1+p_frak)/(1-p_frak)
    spread = float((card*rad*rad).sum())

    balanced = float(rad.max()) * math.sqrt(k*infl*(M+n)/m)

    def pair(p, q):
        return k*math.sqrt(card[p]+card[q]+n) * math.sqrt(infl*spread/(card[p]*card[q]))

    bounds = _pair_matrix(k, pair)
    pairwise = float(numpy.nanmax(bounds))
    return GapRequirement(balanced, pairwise, max(balanced, pairwise), bounds,
                          k, int(n), tuple(int(c) for c in card), tuple(rad.tolist()),
                          int(M), int(m), float(p_frak))


def extract_core(dataset, partition, cluster_index, p_frak):
    '''
    Return the CoreProfile of one cluster.

    The core is the smallest ball around the full cluster centroid
    whose members carry at least 1-p_frak of the cluster's summed
    squared distances to that centroid.
    '''
    check_partition(dataset, partition)
    if not 0 <= p_frak < 1:
        raise ValueError(f'p_frak must lie in [0,1), got {p_frak}')
    if not 0 <= cluster_index < partition.k:
        raise ValueError(f'no cluster {cluster_index} among {partition.k}')

    idx = partition.members(cluster_index)
    pts = dataset.points[idx]
    centroid = pts.mean(axis=0)
    d2 = ((pts - centroid)**2).sum(axis=1)

    order = numpy.argsort(d2, kind='stable')
    cum = numpy.cumsum(d2[order])
    total = cum[-1]
    if total == 0 or p_frak == 0:
        return CoreProfile(idx, float(math.sqrt(d2.max())), len(idx), 1.0, p_frak, centroid)

    last = min(int(numpy.searchsorted(cum, (1-p_frak)*total, side='left')), len(cum)-1)
    edge = d2[order[last]]
    inside = d2 <= edge
    fraction = float(d2[inside].sum() / total)
    return CoreProfile(idx[inside], float(math.sqrt(edge)), int(inside.sum()),
                       fraction, p_frak, centroid)


def verify(dataset, partition, mode='plain', p_frak=None, margin=1.0):
    '''
    Return the ClusterabilityVerdict of partition on dataset.

    In core mode the radii of the required gap are all set to the
    largest core radius.
    '''
    check_partition(dataset, partition)
    if partition.k < 2:
        raise ValueError(f'verification needs k >= 2, got {partition.k}')
    if margin <= 0:
        raise ValueError(f'margin must be positive, got {margin}')

    if mode == 'plain':
        stats = compute_stats(dataset, partition)
        r_max = max(s.enclosing_radius for s in stats)
        req = required_gap_plain(partition.k, partition.cardinalities, r_max)
        cores = None
    elif mode == 'core':
        if p_frak is None:
            raise ValueError('core mode needs p_frak')
        cores = [extract_core(dataset, partition, j, p_frak) for j in range(partition.k)]
        stats = [ClusterStats(c.centroid, c.core_cardinality, c.core_radius, None) for c in cores]
        r_max = max(c.core_radius for c in cores)
        req = required_gap_core(partition.k, [c.core_cardinality for c in cores],
                                [r_max]*partition.k, p_frak)
    else:
        raise ValueError(f'unknown verification mode: "{mode}"')

    gaps = gap_report(stats)
    detail = [(p, q, g, float(req.pair_bounds[p, q])) for p, q, g in gaps.pairs()]
    ok = bool(gaps.min_gap >= margin*req.g_required)
    log.info(f'{mode} verdict: min gap {gaps.min_gap} vs required {req.g_required} '
             f'x {margin}: {"pass" if ok else "fail"}')
    return ClusterabilityVerdict(mode, gaps.min_gap, req, ok, detail, margin, cores)


def _validate(config, a_points, b_points, x, y, a_reach, b_reach, seed_reach, what):
    cfg = config
    scale = 2*cfg.rho + cfg.g
    tol = 1e-9*max(scale, 1.0)
    if cfg.g <= 0 or cfg.rho < 0:
        raise HypothesisViolation(f'need g > 0 and rho >= 0, got g={cfg.g} rho={cfg.rho}')
    if cfg.A.shape != cfg.B.shape:
        raise HypothesisViolation(f'centers differ in dimension: {cfg.A.shape} vs {cfg.B.shape}')
    dist = float(numpy.linalg.norm(cfg.A - cfg.B))
    if abs(dist - scale) > tol:
        raise HypothesisViolation(f'|A-B| = {dist} but 2 rho + g = {scale}')
    if abs(cfg.core_radius - cfg.g/2) > tol:
        raise HypothesisViolation(f'core radius {cfg.core_radius} is not g/2 = {cfg.g/2}')

    def within(pts, center, reach, label):
        pts = numpy.atleast_2d(numpy.asarray(pts, dtype='float64'))
        if pts.size == 0:
            return pts.reshape(0, center.size)
        if pts.shape[1] != center.size:
            pts = pts.reshape(-1, center.size)
        far = numpy.linalg.norm(pts - center, axis=1).max()
        if far > reach + tol:
            raise HypothesisViolation(f'{label} reaches {far} from its center, more than {reach}')
        return pts

    a_pts = within(a_points, cfg.A, a_reach, f'{what} A-points')
    b_pts = within(b_points, cfg.B, b_reach, f'{what} B-points')
    x = within(x, cfg.A, seed_reach, 'X')[0]
    y = within(y, cfg.B, seed_reach, 'Y')[0]
    return a_pts, b_pts, x, y, tol*scale


def _kept(a_pts, b_pts, x, y, eps):
    '''
    Exact ties count as kept since the theorems allow equality.
    '''
    def d2(pts, c):
        return ((pts - c)**2).sum(axis=1)
    a_ok = numpy.all(d2(a_pts, x) <= d2(a_pts, y) + eps)
    b_ok = numpy.all(d2(b_pts, y) <= d2(b_pts, x) + eps)
    return bool(a_ok and b_ok)


def check_core_preservation(config, cluster_A_points, cluster_B_points, X, Y):
    '''
    Return True if one nearest-center step around X and Y gives every
    A-point to X and every B-point to Y.

    Raises HypothesisViolation unless the points lie within rho of
    their centers and X, Y lie within the core radius g/2 of A, B.
    '''
    a_pts, b_pts, x, y, eps = _validate(config, cluster_A_points, cluster_B_points, X, Y,
                                        config.rho, config.rho, config.core_radius,
                                        'cluster')
    return _kept(a_pts, b_pts, x, y, eps)


def check_core_retention(config, A_core_points, B_core_points, X, Y):
    '''
    Return True if one nearest-center step around X and Y keeps every
    point within g/2 of A with X and every point within g/2 of B with Y.

    Here X and Y may be anywhere within rho of A and B.
    '''
    a_pts, b_pts, x, y, eps = _validate(config, A_core_points, B_core_points, X, Y,
                                        config.core_radius, config.core_radius, config.rho,
                                        'core')
    return _kept(a_pts, b_pts, x, y, eps)


class PreservationTally(namedtuple("PreservationTally", "trials failures kind")):
    __slots__ = ()


def random_preservation_config(dim, rng, points=16, kind='preservation'):
    '''
    Draw a random configuration meeting the hypotheses of one of the
    core theorems.  Return (config, A points, B points, X, Y).

    Some points are placed on the boundary spheres, on the side facing
    the other cluster.
    '''
    from wellclust.generators import uniform_ball

    rho = rng.uniform(0.1, 2.0)
    g = rng.uniform(0.01, 2.0)
    A = rng.normal(size=dim)
    u = rng.normal(size=dim)
    u /= numpy.linalg.norm(u)
    B = A + (2*rho + g)*u
    cfg = CorePreservationConfig(A, B, rho, g)

    if kind == 'preservation':
        reach, seed_reach = rho, g/2
    elif kind == 'retention':
        reach, seed_reach = g/2, rho
    else:
        raise ValueError(f'unknown core theorem: "{kind}"')

    a_pts = numpy.vstack([A + uniform_ball(rng, points, dim, reach), A + reach*u])
    b_pts = numpy.vstack([B + uniform_ball(rng, points, dim, reach), B - reach*u])
    x = A + uniform_ball(rng, 1, dim, seed_reach)[0]
    y = B + uniform_ball(rng, 1, dim, seed_reach)[0]
    return cfg, a_pts, b_pts, x, y


def preservation_trials(trials, dims=(1, 2, 3, 5), rng_seed=0, kind='preservation', points=16):
    '''
    Return PreservationTally of random checks of one core theorem.
    Trial t uses dimension dims[t % len(dims)] and stream t of rng_seed.
    '''
    from wellclust.engine import make_rng

    check = dict(preservation=check_core_preservation,
                 retention=check_core_retention)[kind]
    failures = 0
    for trial in range(trials):
        rng = make_rng(rng_seed, trial)
        dim = dims[trial % len(dims)]
        cfg, a_pts, b_pts, x, y = random_preservation_config(dim, rng, points, kind)
        if not check(cfg, a_pts, b_pts, x, y):
            log.warning(f'{kind} trial {trial} in {dim}D failed')
            failures += 1
    return PreservationTally(trials, failures, kind)


def centers_stay_home(dataset, partition, seed_indices, max_iters=100):
    '''
    Run Lloyd from one data point per cluster and return True if every
    center stays nearest to the centroid of the cluster it was seeded
    in, at every iteration.
    '''
    from wellclust.engine import lloyd

    check_partition(dataset, partition)
    seed_indices = numpy.asarray(seed_indices)
    home = partition.labels[seed_indices]
    if sorted(home.tolist()) != list(range(partition.k)):
        raise ValueError('need exactly one seed in each cluster')
    planted = centroids(dataset, partition)
    moved = list()

    def watch(iteration, centers, labels):
        if numpy.any(assign(centers, planted) != home):
            moved.append(iteration)

    lloyd(dataset, dataset.points[seed_indices], max_iters, callback=watch)
    if moved:
        log.info(f'centers left their clusters at iterations {moved}')
    return not moved


class Assessment(namedtuple("Assessment", "verdict analysis result conclusion")):
    '''
    :param ClusterabilityVerdict verdict: verdict of the best partition.
    :param SeedingAnalysis analysis: the repetition count derivation.
    :param RunResult result: best multi-restart run.
    :param str conclusion: well-clusterable, not-well-clusterable or
        inconclusive.
    '''
    __slots__ = ()


def assess(dataset, k, mode='plain', p_frak=None, pr_succ=0.95, ratio=None,
           rng_seed=0, margin=1.0, cap=10**6, max_iters=100, workers=1):
    '''
    Cluster with enough k-means++ restarts to find a well clusterable
    partition with probability pr_succ, if one exists, and verify it.

    The repetitions come from the equal size bound unless a size ratio
    M/m is given or the mode is core.  A failed verification with a
    reachable repetition count means the data are not well clusterable
    with confidence pr_succ.
    '''
    from wellclust.analytics import repetition_analysis
    from wellclust.engine import multi_restart

    if mode == 'core' and p_frak is None:
        raise ValueError('core mode needs p_frak')
    sa = repetition_analysis(k, dataset.n, ratio, p_frak if mode == 'core' else None,
                             pr_succ, cap)

    log.info(f'assessing with {sa.R} restarts (p_single={sa.p_single})')
    res = multi_restart(dataset, k, sa.R, rng_seed, max_iters=max_iters, workers=workers)
    verdict = verify(dataset, res.partition, mode, p_frak, margin)
    if verdict.well_clusterable:
        conclusion = 'well-clusterable'
    elif sa.reachable:
        conclusion = 'not-well-clusterable'
    else:
        conclusion = 'inconclusive'
    return Assessment(verdict, sa, res, conclusion)
