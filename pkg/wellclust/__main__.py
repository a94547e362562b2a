#!/usr/bin/env python3

import os
import sys
from collections import namedtuple

import click

from wellclust.util.cli import (Done, manifested, setup_logging, load_params,
                                int_list, float_list, LOG_LEVELS)
from wellclust.util import fileio

cmddef = dict(context_settings = dict(help_option_names=['-h', '--help']))

seed_type = click.IntRange(min=0)


@click.group("wellclust", **cmddef)
@click.option("-c", "--params", default=None,
              help="JSON or Jsonnet file of option defaults keyed by command name")
@click.option("-J", "--jpath", multiple=True, envvar='WELLCLUST_PATH',
              help="Directories to search for the parameter file and its imports")
@click.option("-A", "--tla", multiple=True,
              help="Set a top-level argument of a Jsonnet parameter file as key=val, key=code or key=filename")
@click.option("-l", "--log-level", default='warning', type=click.Choice(LOG_LEVELS),
              help="Logging level")
@click.pass_context
def cli(ctx, params, jpath, tla, log_level):
    '''
    k-means++ with a posteriori well-clusterability checks
    '''
    ctx.ensure_object(dict)
    setup_logging(log_level)
    if params:
        try:
            ctx.default_map = load_params(params, jpath, tla)
        except (ValueError, OSError) as err:
            raise click.ClickException(str(err)) from err


def _path(output, name):
    return os.path.join(output, name)


def _dump_report(output, name, obj):
    from wellclust import persist
    persist.dump(_path(output, name), obj)


def _radii(radius):
    return radius[0] if len(radius) == 1 else radius


def _save_planted(planted, output):
    fileio.save_dataset(_path(output, 'dataset.csv'), planted.dataset)
    fileio.save_partition(_path(output, 'partition.csv'), planted.planted_partition)
    summary = dict(planted._asdict())
    summary.pop('dataset')
    summary.pop('planted_partition')
    click.echo(f'min gap {planted.realized_min_gap:.6g} for required {planted.required_gap:.6g}')
    return Done(['dataset.csv', 'partition.csv'], summary=summary)


@cli.group("generate")
def generate():
    '''
    Generate synthetic datasets.
    '''


@generate.command("plain")
@click.option("--k", type=int, required=True, help="Number of clusters")
@click.option("--sizes", required=True, callback=int_list,
              help="Comma separated cluster sizes")
@click.option("--radius", default="1.0", callback=float_list,
              help="Cluster radius or comma separated radii")
@click.option("--dim", default=2, type=int, help="Dimension")
@click.option("--margin", default=1.0, type=float,
              help="Multiple of the required gap to realize")
@click.option("--seed", default=0, type=seed_type, help="RNG seed")
@manifested()
def generate_plain(k, sizes, radius, dim, margin, seed, output):
    '''
    Generate clusters separated by the plain gap requirement.
    '''
    from wellclust.generators import gen_well_clusterable
    planted = gen_well_clusterable(k, sizes, _radii(radius), dim, margin, seed)
    return _save_planted(planted, output)


@generate.command("core")
@click.option("--k", type=int, required=True, help="Number of clusters")
@click.option("--sizes", required=True, callback=int_list,
              help="Comma separated core sizes")
@click.option("--radius", default="1.0", callback=float_list,
              help="Core radius or comma separated radii")
@click.option("--dim", default=2, type=int, help="Dimension")
@click.option("--p-frak", required=True, type=float,
              help="Share of cluster cost allowed outside the core")
@click.option("--stragglers", default=1, type=int,
              help="Antipodal straggler pairs per cluster")
@click.option("--margin", default=1.0, type=float,
              help="Multiple of the required core gap to realize")
@click.option("--seed", default=0, type=seed_type, help="RNG seed")
@manifested()
def generate_core(k, sizes, radius, dim, p_frak, stragglers, margin, seed, output):
    '''
    Generate clusters whose cores meet the core gap requirement.
    '''
    from wellclust.generators import gen_core_clusterable
    planted = gen_core_clusterable(k, sizes, _radii(radius), dim, p_frak, margin, seed,
                                   stragglers)
    return _save_planted(planted, output)


@generate.command("ring")
@click.option("--n", default=2000, type=int, help="Number of points")
@click.option("--radius", default=1.0, type=float, help="Ring radius")
@click.option("--thickness", default=0.05, type=float, help="Ring thickness")
@click.option("--seed", default=0, type=seed_type, help="RNG seed")
@manifested()
def generate_ring(n, radius, thickness, seed, output):
    '''
    Generate a thin uniformly covered ring.
    '''
    from wellclust.generators import gen_ring
    fileio.save_dataset(_path(output, 'dataset.csv'), gen_ring(n, radius, thickness, seed))
    return Done(['dataset.csv'])


@generate.command("counterexample")
@click.option("--r", default=1.0, type=float, help="Big cluster radius")
@click.option("--gap-multiple", default=9.0, type=float,
              help="Surface gap in units of r")
@click.option("--n-big", default=1000, type=int, help="Big cluster size, even")
@click.option("--n-small", default=2, type=int, help="Small cluster size")
@click.option("--dim", default=1, type=int, help="Dimension")
@click.option("--spread", default=0.0, type=float,
              help="Subgroup jitter in units of r")
@click.option("--seed", default=0, type=seed_type, help="RNG seed")
@manifested()
def generate_counterexample(r, gap_multiple, n_big, n_small, dim, spread, seed, output):
    '''
    Generate an unbalanced pair of clusters whose gap partition is not
    the k-means optimum.
    '''
    from wellclust.generators import gen_unbalanced_counterexample
    rep = gen_unbalanced_counterexample(r, gap_multiple, n_big, n_small, seed, dim, spread)
    fileio.save_dataset(_path(output, 'dataset.csv'), rep.dataset)
    fileio.save_partition(_path(output, 'partition.csv'), rep.gap_partition)
    fileio.save_partition(_path(output, 'alternative.csv'), rep.alternative_partition)
    doc = rep._asdict()
    for key in ('dataset', 'gap_partition', 'alternative_partition'):
        doc.pop(key)
    _dump_report(output, 'report.json', doc)
    click.echo(f'Q_gap={rep.Q_gap:.6g} Q_alt={rep.Q_alt:.6g} '
               f'{"succeeded" if rep.succeeded else "failed"}')
    return Done(['dataset.csv', 'partition.csv', 'alternative.csv', 'report.json'],
                summary=dict(Q_gap=rep.Q_gap, Q_alt=rep.Q_alt, succeeded=rep.succeeded))


@cli.command("cluster")
@click.option("--k", type=int, required=True, help="Number of clusters")
@click.option("-R", "--repetitions", default=1, type=click.IntRange(min=1),
              help="Number of k-means++ restarts")
@click.option("--auto-reps", is_flag=True, default=False,
              help="Derive the restarts from --pr-succ, --ratio and --p-frak")
@click.option("--pr-succ", default=0.95, type=float,
              help="Target success probability for --auto-reps")
@click.option("--ratio", default=None, type=float,
              help="Worst case cluster size ratio M/m for --auto-reps")
@click.option("--p-frak", default=None, type=float,
              help="Core straggler fraction for --auto-reps")
@click.option("--cap", default=10**6, type=int, help="Largest restart count")
@click.option("--seed", default=0, type=seed_type, help="RNG seed")
@click.option("--max-iters", default=100, type=int, help="Lloyd iteration limit")
@click.option("--tol", default=1e-10, type=float, help="Center shift tolerance")
@click.option("--workers", default=1, type=int, help="Restarts run in parallel")
@click.argument("dataset")
@manifested("dataset")
def cluster(k, repetitions, auto_reps, pr_succ, ratio, p_frak, cap, seed,
            max_iters, tol, workers, dataset, output):
    '''
    Run k-means++ with restarts on a dataset CSV.
    '''
    from wellclust import persist
    from wellclust.engine import multi_restart
    from wellclust.analytics import repetition_analysis

    ds = fileio.load_dataset(dataset)
    summary = dict()
    if auto_reps:
        sa = repetition_analysis(k, ds.n, ratio, p_frak, pr_succ, cap)
        repetitions = sa.R
        summary.update(p_single=sa.p_single, reachable=sa.reachable)
    res = multi_restart(ds, k, repetitions, seed, max_iters, tol, workers)
    fileio.save_partition(_path(output, 'partition.csv'), res.partition)
    persist.dump(_path(output, 'result.json'), res)
    summary.update(cost=res.cost, iterations=res.iterations, run=res.run,
                   repetitions=repetitions)
    click.echo(f'cost {res.cost:.17g} from run {res.run} of {repetitions}')
    return Done(['partition.csv', 'result.json'], summary=summary)


def _need_p_frak(mode, p_frak):
    if mode == 'core' and p_frak is None:
        raise click.ClickException('core mode needs --p-frak')


@cli.command("verify")
@click.option("--mode", default='plain', type=click.Choice(['plain', 'core']),
              help="Gaps between enclosing balls or between cores")
@click.option("--p-frak", default=None, type=float,
              help="Share of cluster cost allowed outside the core")
@click.option("--margin", default=1.0, type=float,
              help="Require the gap to exceed this multiple of the bound")
@click.argument("dataset")
@click.argument("partition")
@manifested("dataset", "partition")
def verify(mode, p_frak, margin, dataset, partition, output):
    '''
    Check that a partition certifies its dataset as well clusterable.

    Exits 0 if it does and 2 if it does not.
    '''
    from wellclust import persist, verifier
    _need_p_frak(mode, p_frak)
    ds = fileio.load_dataset(dataset)
    part = fileio.load_partition(partition)
    verdict = verifier.verify(ds, part, mode, p_frak, margin)
    persist.dump(_path(output, 'verdict.json'), verdict)
    click.echo(f'{"well-clusterable" if verdict.well_clusterable else "not well-clusterable"}: '
               f'min gap {verdict.measured_min_gap:.6g}, '
               f'required {verdict.required_gap.g_required:.6g}')
    return Done(['verdict.json'], 0 if verdict.well_clusterable else 2,
                dict(well_clusterable=verdict.well_clusterable,
                     measured_min_gap=verdict.measured_min_gap,
                     required_gap=verdict.required_gap.g_required))


@cli.command("assess")
@click.option("--k", type=int, required=True, help="Number of clusters")
@click.option("--mode", default='plain', type=click.Choice(['plain', 'core']),
              help="Gaps between enclosing balls or between cores")
@click.option("--p-frak", default=None, type=float,
              help="Share of cluster cost allowed outside the core")
@click.option("--pr-succ", default=0.95, type=float,
              help="Target success probability")
@click.option("--ratio", default=None, type=float,
              help="Worst case cluster size ratio M/m")
@click.option("--margin", default=1.0, type=float,
              help="Require the gap to exceed this multiple of the bound")
@click.option("--cap", default=10**6, type=int, help="Largest restart count")
@click.option("--seed", default=0, type=seed_type, help="RNG seed")
@click.option("--workers", default=1, type=int, help="Restarts run in parallel")
@click.argument("dataset")
@manifested("dataset")
def assess(k, mode, p_frak, pr_succ, ratio, margin, cap, seed, workers, dataset, output):
    '''
    Cluster with enough restarts and verify the result.

    Exits 0 if well clusterable and 2 otherwise.
    '''
    from wellclust import persist, verifier
    _need_p_frak(mode, p_frak)
    ds = fileio.load_dataset(dataset)
    got = verifier.assess(ds, k, mode, p_frak, pr_succ, ratio, seed, margin, cap,
                          workers=workers)
    fileio.save_partition(_path(output, 'partition.csv'), got.result.partition)
    persist.dump(_path(output, 'assessment.json'), got)
    click.echo(f'{got.conclusion} after {got.analysis.R} restarts')
    ok = got.verdict.well_clusterable
    return Done(['partition.csv', 'assessment.json'], 0 if ok else 2,
                dict(conclusion=got.conclusion, repetitions=got.analysis.R))


CURVE_COLUMNS = ('x', 'g_over_r', 'p_single', 'p_approx', 'R', 'reachable')


@cli.command("analyze")
@click.option("--regime", default='equal', type=click.Choice(['equal', 'unbalanced', 'core']),
              help="Seeding regime")
@click.option("--k-min", default=2, type=int, help="Smallest k of the equal regime")
@click.option("--k-max", default=30, type=int, help="Largest k of the equal regime")
@click.option("--k", default=2, type=int, help="Number of clusters of other regimes")
@click.option("--n", default=1000, type=int, help="Number of points")
@click.option("--ratios", default="1,2,5,10,20,50,100", callback=float_list,
              help="Size ratios M/m of the unbalanced regime")
@click.option("--p-fraks", default="0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5",
              callback=float_list, help="Straggler fractions of the core regime")
@click.option("--ratio", default=1.0, type=float, help="Size ratio of the core regime")
@click.option("--pr-succ", default=0.95, type=float, help="Target success probability")
@click.option("--cap", default=10**6, type=int, help="Largest restart count")
@manifested()
def analyze(regime, k_min, k_max, k, n, ratios, p_fraks, ratio, pr_succ, cap, output):
    '''
    Tabulate required gaps, seeding bounds and restart counts.
    '''
    from wellclust import analytics
    if regime == 'equal':
        if not 2 <= k_min <= k_max:
            raise ValueError(f'need 2 <= k-min <= k-max, got {k_min} and {k_max}')
        rows = analytics.curve_equal(range(k_min, k_max+1), pr_succ, cap)
    elif regime == 'unbalanced':
        rows = analytics.curve_unbalanced(k, ratios, n, pr_succ, cap)
    else:
        rows = analytics.curve_core(k, p_fraks, n, ratio, pr_succ, cap)
    if not rows:
        raise ValueError('empty curve range')
    fileio.save_table(_path(output, 'curve.csv'), rows, CURVE_COLUMNS)
    click.echo(f'{len(rows)} rows')
    return Done(['curve.csv'], summary=dict(rows=len(rows)))


Bin = namedtuple("Bin", "lo hi count")


@cli.command("histogram")
@click.option("--bins", default=50, type=int, help="Number of equal width bins")
@click.argument("dataset")
@manifested("dataset")
def histogram(bins, dataset, output):
    '''
    Histogram all pairwise distances of a dataset.
    '''
    from wellclust.generators import distance_histogram, local_maxima
    hist = distance_histogram(fileio.load_dataset(dataset), bins)
    rows = [Bin(lo, hi, c) for lo, hi, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts)]
    fileio.save_table(_path(output, 'histogram.csv'), rows, Bin._fields)
    maxima = local_maxima(hist.counts)
    click.echo(f'{len(maxima)} local maxima at bins {maxima}')
    return Done(['histogram.csv'], summary=dict(local_maxima=maxima))


@cli.command("preservation")
@click.option("--trials", default=10000, type=int, help="Number of random configurations")
@click.option("--dims", default="1,2,3,5", callback=int_list, help="Dimensions to cycle through")
@click.option("--kind", default='preservation', type=click.Choice(['preservation', 'retention']),
              help="Which core theorem to check")
@click.option("--points", default=16, type=int, help="Random points per cluster")
@click.option("--seed", default=0, type=seed_type, help="RNG seed")
@manifested()
def preservation(trials, dims, kind, points, seed, output):
    '''
    Check a core theorem on random configurations.

    Exits 2 if any configuration fails.
    '''
    from wellclust.verifier import preservation_trials
    tally = preservation_trials(trials, dims, seed, kind, points)
    _dump_report(output, 'preservation.json', tally)
    click.echo(f'{tally.failures} of {tally.trials} {kind} trials failed')
    return Done(['preservation.json'], 2 if tally.failures else 0, tally._asdict())


def _find_command(ctx, path):
    cmd = ctx.find_root().command
    for name in path:
        sub = cmd.get_command(ctx, name) if isinstance(cmd, click.Group) else None
        if sub is None:
            raise click.ClickException(f'unknown command: {" ".join(path)}')
        cmd = sub
    return cmd


@cli.command("replay")
@click.option("-o", "--output", required=True, type=click.Path(file_okay=False),
              help="Directory for the replayed outputs")
@click.argument("manifest")
@click.pass_context
def replay(ctx, output, manifest):
    '''
    Rerun the command recorded in a manifest and compare outputs.

    Exits 0 if every output is byte identical and 2 if not.
    '''
    from wellclust.util.manifest import load_manifest, changed_inputs, compare_outputs
    try:
        man = load_manifest(manifest)
        changed = changed_inputs(man)
    except (ValueError, OSError) as err:
        raise click.ClickException(str(err)) from err
    if changed:
        raise click.ClickException(f'inputs changed since the run: {", ".join(changed)}')
    if os.path.realpath(output) == os.path.realpath(os.path.dirname(os.path.abspath(manifest))):
        raise click.ClickException('replay into a directory other than the original')

    cmd = _find_command(ctx, man.command)
    params = dict(man.params, output=output)
    ctx.obj['command'] = man.command
    try:
        ctx.invoke(cmd, **params)
    except click.exceptions.Exit:
        pass
    except TypeError as err:
        raise click.ClickException(f'manifest parameters do not fit the command: {err}') from err
    finally:
        ctx.obj.pop('command', None)

    bad = compare_outputs(man, output)
    if bad:
        click.echo(f'differing outputs: {", ".join(bad)}')
        ctx.exit(2)
    click.echo(f'all {len(man.outputs)} outputs reproduced')


def main(args=None):
    try:
        rv = cli.main(args=args, prog_name='wellclust', obj=dict(), standalone_mode=False)
    except click.ClickException as err:
        err.show()
        sys.exit(1)
    except click.exceptions.Abort:
        click.echo('Aborted!', err=True)
        sys.exit(1)
    sys.exit(rv if isinstance(rv, int) else 0)


if '__main__' == __name__:
    main()
