#!/usr/bin/env python3
'''
Lower bounds on the chance that one k-means++ seeding puts exactly one
seed in every cluster, and the number of restarts needed to reach a
target overall success probability.

Three regimes are covered:

- equal :: all clusters hold n/k points and the gap meets the equal
  size requirement.

- unbalanced :: cluster sizes lie between m and M.

- core :: as unbalanced, but only the cores of the clusters are
  required to be separated and up to a fraction p_frak of each
  cluster's cost may lie outside of its core.

The exact expressions are what the decisions use.  The exponential
approximations and the large-n limit of the core bound are given for
plotting only.
'''

import math
import logging
from collections import namedtuple

import numpy

log = logging.getLogger(__name__)


class Unsatisfiable(ValueError):
    '''
    No number of repetitions reaches the requested success probability.
    '''


class SeedingAnalysis(namedtuple("SeedingAnalysis",
                                 "regime k n m M p_frak p_single p_approx R pr_succ_target reachable")):
    '''
    :param str regime: one of equal, unbalanced or core.
    :param int k: number of clusters.
    :param float n: number of points (None in the equal regime).
    :param float m: smallest cluster size.
    :param float M: largest cluster size.
    :param float p_frak: allowed straggler cost fraction (core only).
    :param float p_single: lower bound on one seeding succeeding.
    :param float p_approx: the exponential approximation of p_single.
    :param int R: repetitions, capped at the configured maximum.
    :param float pr_succ_target: requested overall success probability.
    :param bool reachable: False if R hit the cap.
    '''
    __slots__ = ()


class CurveRow(namedtuple("CurveRow", "x g_over_r p_single p_approx R reachable")):
    '''
    One row of a curve table.  The x is k, M/m or p_frak depending on
    the curve.
    '''
    __slots__ = ()


class SeedingRate(namedtuple("SeedingRate", "hits trials rate stderr")):
    '''
    :param int hits: seedings that put one seed in every cluster.
    :param int trials: number of seedings tried.
    :param float rate: hits/trials.
    :param float stderr: binomial standard error of rate.
    '''
    __slots__ = ()


def _check_k(k):
    if int(k) != k or k < 2:
        raise ValueError(f'need an integer k >= 2, got {k}')


def _check_p_frak(p_frak):
    if not 0 <= p_frak < 1:
        raise ValueError(f'p_frak must lie in [0,1), got {p_frak}')


def _check_sizes(k, n, m, M):
    _check_k(k)
    if not (n > 0 and 0 < m <= M):
        raise ValueError(f'need n > 0 and 0 < m <= M, got n={n} m={m} M={M}')
    if k*m > n*(1+1e-12):
        raise ValueError(f'{k} clusters of at least {m} points exceed n={n}')


def p_seed_equal(k):
    '''
    Return the seeding success bound for k equal size clusters.
    '''
    _check_k(k)
    a = k*k*(k+1)**2
    return (a / (a + k - 1))**(k-1)


def p_seed_equal_approx(k):
    _check_k(k)
    a = k*k*(k+1)**2
    return math.exp(-(k-1)**2 / (a + k - 1))


def p_seed_unbalanced(k, n, m, M):
    '''
    Return the seeding success bound for cluster sizes in [m, M].

    The sizes need not be integers.  The worst case construction of
    worst_case_sizes() may even give M > n.
    '''
    _check_sizes(k, n, m, M)
    a = k*k*n*(2 + n/m)
    return (a / (a + (k-1)*M))**(k-1)


def p_seed_unbalanced_approx(k, n, m, M):
    _check_sizes(k, n, m, M)
    a = k*k*n*(2 + n/m)
    return math.exp(-(k-1)**2 * M / (a + (k-1)*M))


def p_seed_core(k, n, m, M, p_frak):
    '''
    Return the seeding success bound when only cluster cores are
    separated and p_frak of each cluster's cost may lie outside.

    With p_frak=0 this is p_seed_unbalanced().
    '''
    _check_sizes(k, n, m, M)
    _check_p_frak(p_frak)
    a = k*k*(1+p_frak)*n*(2 + n/m)
    return ((1-p_frak) * a / (a + (k-1)*M))**(k-1)


def p_seed_core_approx(k, n, m, M, p_frak):
    _check_sizes(k, n, m, M)
    _check_p_frak(p_frak)
    a = k*k*(1+p_frak)*n*(2 + n/m)
    return p_seed_core_limit(k, p_frak) * math.exp(-(k-1)**2 * M / (a + (k-1)*M))


def p_seed_core_limit(k, p_frak):
    '''
    Return (1-p_frak)^(k-1), the value p_seed_core() tends to for
    large n/m.
    '''
    _check_k(k)
    _check_p_frak(p_frak)
    return (1-p_frak)**(k-1)


def p_seed_from_gap(k, g, r, m, M):
    '''
    Return the seeding bound for a measured gap g and radius r as the
    product over seeding steps i=1..k-1 of

        (k-i) m g^2 / ((k-i) m g^2 + i M r^2)
    '''
    _check_k(k)
    if g < 0 or r < 0 or not 0 < m <= M:
        raise ValueError(f'need g >= 0, r >= 0 and 0 < m <= M, got g={g} r={r} m={m} M={M}')
    if r == 0:
        return 1.0
    i = numpy.arange(1, k)
    good = (k-i)*m*g*g
    return float(numpy.prod(good / (good + i*M*r*r)))


def worst_case_sizes(n, k, ratio):
    '''
    Return (m, M) for a size spread M/m = ratio around n/k.
    '''
    _check_k(k)
    if ratio < 1:
        raise ValueError(f'size ratio M/m must be at least 1, got {ratio}')
    root = math.sqrt(ratio)
    return (n/k/root, n/k*root)


def gap_over_radius(k, n, m, M, p_frak=0.0):
    '''
    Return the required gap in units of the cluster radius for sizes
    in [m, M], taking the worst pair as two clusters of size m.

    With m = M = n/k this is max(sqrt(k(k+1)), k sqrt(2k+k^2)).
    '''
    _check_sizes(k, n, m, M)
    _check_p_frak(p_frak)
    infl = (1+p_frak)/(1-p_frak)
    balanced = math.sqrt(k*infl*(M+n)/m)
    pairwise = k*math.sqrt(infl*n*(2*m+n))/m
    return max(balanced, pairwise)


def required_repetitions(p_single, pr_succ):
    '''
    Return the smallest R with (1-p_single)^R < 1-pr_succ.
    '''
    if not 0 < pr_succ < 1:
        raise ValueError(f'pr_succ must lie in (0,1), got {pr_succ}')
    if not 0 <= p_single <= 1:
        raise ValueError(f'p_single must lie in [0,1], got {p_single}')
    if p_single == 0:
        raise Unsatisfiable('seeding never succeeds, no repetition count helps')
    if p_single == 1:
        return 1

    lq = math.log1p(-p_single)
    lt = math.log1p(-pr_succ)
    R = max(1, math.ceil(lt/lq))
    while R > 1 and (R-1)*lq < lt:
        R -= 1
    while not R*lq < lt:
        R += 1
    return R


def seeding_analysis(regime, k, n=None, m=None, M=None, p_frak=None, pr_succ=0.95, cap=10**6):
    '''
    Return a SeedingAnalysis for the given regime.

    R is capped at cap; a capped R is flagged as unreachable.
    '''
    if regime == 'equal':
        p = p_seed_equal(k)
        pa = p_seed_equal_approx(k)
    elif regime == 'unbalanced':
        p = p_seed_unbalanced(k, n, m, M)
        pa = p_seed_unbalanced_approx(k, n, m, M)
    elif regime == 'core':
        if p_frak is None:
            raise ValueError('the core regime needs p_frak')
        p = p_seed_core(k, n, m, M, p_frak)
        pa = p_seed_core_approx(k, n, m, M, p_frak)
    else:
        raise ValueError(f'unknown regime: "{regime}"')

    R = required_repetitions(p, pr_succ)
    reachable = R <= cap
    if not reachable:
        log.warning(f'{regime} regime needs {R} repetitions, capped at {cap}')
        R = cap
    return SeedingAnalysis(regime, k, n, m, M, p_frak, p, pa, R, pr_succ, reachable)


def repetition_analysis(k, n, ratio=None, p_frak=None, pr_succ=0.95, cap=10**6):
    '''
    Return the SeedingAnalysis deciding how many restarts to run on n
    points.

    The equal regime is used unless a size ratio M/m or a straggler
    fraction is given, in which case the worst case sizes for the ratio
    (1 if not given) feed the unbalanced or core regime.
    '''
    if ratio is None and p_frak is None:
        return seeding_analysis('equal', k, pr_succ=pr_succ, cap=cap)
    m, M = worst_case_sizes(n, k, 1.0 if ratio is None else ratio)
    regime = 'unbalanced' if p_frak is None else 'core'
    return seeding_analysis(regime, k, n, m, M, p_frak, pr_succ=pr_succ, cap=cap)


def _row(x, g_over_r, sa):
    return CurveRow(x, g_over_r, sa.p_single, sa.p_approx, sa.R, sa.reachable)


def curve_equal(ks, pr_succ=0.95, cap=10**6):
    '''
    Return CurveRow list over numbers of equal size clusters.
    '''
    rows = list()
    for k in ks:
        sa = seeding_analysis('equal', k, pr_succ=pr_succ, cap=cap)
        rows.append(_row(k, gap_over_radius(k, k, 1, 1), sa))
    return rows


def curve_unbalanced(k, ratios, n=1000, pr_succ=0.95, cap=10**6):
    '''
    Return CurveRow list over size ratios M/m.
    '''
    rows = list()
    for ratio in ratios:
        m, M = worst_case_sizes(n, k, ratio)
        sa = seeding_analysis('unbalanced', k, n, m, M, pr_succ=pr_succ, cap=cap)
        rows.append(_row(ratio, gap_over_radius(k, n, m, M), sa))
    return rows


def curve_core(k, p_fraks, n=1000, ratio=1.0, pr_succ=0.95, cap=10**6):
    '''
    Return CurveRow list over straggler fractions p_frak.
    '''
    m, M = worst_case_sizes(n, k, ratio)
    rows = list()
    for p_frak in p_fraks:
        sa = seeding_analysis('core', k, n, m, M, p_frak, pr_succ=pr_succ, cap=cap)
        rows.append(_row(p_frak, gap_over_radius(k, n, m, M, p_frak), sa))
    return rows


def seeding_success_rate(dataset, partition, trials, rng_seed, members=None):
    '''
    Return SeedingRate measuring how often one k-means++ seeding puts
    exactly one seed in each cluster.

    If members is given it is a list of k index arrays, such as cluster
    cores, and a seeding succeeds if each holds exactly one seed.
    '''
    from wellclust.engine import seed_kmeanspp

    k = partition.k
    if members is None:
        owner = partition.labels
    else:
        if len(members) != k:
            raise ValueError(f'need {k} member sets, got {len(members)}')
        owner = numpy.full(dataset.n, -1)
        for j, idx in enumerate(members):
            owner[numpy.asarray(idx)] = j

    hits = 0
    for trial in range(trials):
        seed = seed_kmeanspp(dataset, k, rng_seed, trial)
        got = owner[seed.source_indices]
        if numpy.all(numpy.sort(got) == numpy.arange(k)):
            hits += 1
    rate = hits/trials
    return SeedingRate(hits, trials, rate, math.sqrt(rate*(1-rate)/trials))
