#!/usr/bin/env pytest

import json
import numpy
import pytest
from click.testing import CliRunner

from wellclust.__main__ import cli, main
from wellclust.geometry import Dataset, Partition
from wellclust.util import fileio
from wellclust.util.manifest import MANIFEST_NAME, load_manifest
from wellclust import persist


def strict_load(path):
    def refuse(const):
        raise ValueError(f'not strict JSON: {const}')
    return json.loads(path.read_text(), parse_constant=refuse)


def run(*args):
    return CliRunner().invoke(cli, [str(a) for a in args], obj=dict())


def planted(tmp_path, name='planted', sizes='10,10,10', k=3):
    out = tmp_path / name
    res = run('generate', 'plain', '--k', k, '--sizes', sizes, '--seed', 4, '-o', out)
    assert res.exit_code == 0, res.output
    return out


def test_generate_plain(tmp_path):
    out = planted(tmp_path)
    assert sorted(p.name for p in out.iterdir()) == ['dataset.csv', MANIFEST_NAME, 'partition.csv']
    ds = fileio.load_dataset(out / 'dataset.csv')
    part = fileio.load_partition(out / 'partition.csv')
    assert ds.n == 30 and ds.dim == 2
    assert list(part.cardinalities) == [10, 10, 10]
    man = load_manifest(out / MANIFEST_NAME)
    assert man.command == ['generate', 'plain']
    assert man.seed == 4
    assert man.summary['realized_min_gap'] >= man.summary['required_gap']
    assert set(man.outputs) == {'dataset.csv', 'partition.csv'}


def test_generate_others(tmp_path):
    res = run('generate', 'core', '--k', 2, '--sizes', '40,40', '--p-frak', 0.1, '-o', tmp_path / 'core')
    assert res.exit_code == 0, res.output
    res = run('generate', 'ring', '--n', 200, '-o', tmp_path / 'ring')
    assert res.exit_code == 0, res.output
    res = run('generate', 'counterexample', '--gap-multiple', 2, '--n-big', 10, '--n-small', 2,
              '-o', tmp_path / 'cx')
    assert res.exit_code == 0, res.output
    report = persist.load(tmp_path / 'cx' / 'report.json')
    assert report['Q_gap'] == pytest.approx(10)
    assert report['succeeded']
    alt = fileio.load_partition(tmp_path / 'cx' / 'alternative.csv')
    assert list(alt.cardinalities) == [5, 7]


def test_verify(tmp_path):
    out = planted(tmp_path)
    res = run('verify', out / 'dataset.csv', out / 'partition.csv', '-o', tmp_path / 'ok')
    assert res.exit_code == 0, res.output
    verdict = persist.load(tmp_path / 'ok' / 'verdict.json')
    assert strict_load(tmp_path / 'ok' / 'verdict.json')['schema_version'] == 1
    assert verdict.well_clusterable
    assert verdict.mode == 'plain'

    rng = numpy.random.default_rng(0)
    fileio.save_dataset(tmp_path / 'blob.csv', Dataset(rng.normal(size=(40, 2))))
    fileio.save_partition(tmp_path / 'half.csv', Partition(numpy.repeat([0, 1], 20)))
    res = run('verify', tmp_path / 'blob.csv', tmp_path / 'half.csv', '-o', tmp_path / 'bad')
    assert res.exit_code == 2
    assert (tmp_path / 'bad' / 'verdict.json').exists()

    res = run('verify', '--mode', 'core', out / 'dataset.csv', out / 'partition.csv',
              '-o', tmp_path / 'core')
    assert res.exit_code == 1

    res = run('verify', out / 'dataset.csv', tmp_path / 'half.csv', '-o', tmp_path / 'mismatch')
    assert res.exit_code == 1


def test_cluster_is_deterministic(tmp_path):
    out = planted(tmp_path)
    for name in ('a', 'b'):
        res = run('cluster', '--k', 3, '-R', 4, '--seed', 7, out / 'dataset.csv',
                  '-o', tmp_path / name)
        assert res.exit_code == 0, res.output
    for fname in ('partition.csv', 'result.json'):
        assert (tmp_path / 'a' / fname).read_bytes() == (tmp_path / 'b' / fname).read_bytes()
    result = persist.load(tmp_path / 'a' / 'result.json')
    assert 0 <= result.run < 4

    res = run('cluster', '--k', 3, '--auto-reps', out / 'dataset.csv', '-o', tmp_path / 'auto')
    assert res.exit_code == 0, res.output
    man = load_manifest(tmp_path / 'auto' / MANIFEST_NAME)
    assert man.summary['repetitions'] >= 1
    assert man.summary['reachable']


def test_assess(tmp_path):
    out = planted(tmp_path, sizes='20,20', k=2)
    res = run('assess', '--k', 2, '--pr-succ', 0.999, out / 'dataset.csv', '-o', tmp_path / 'assess')
    assert res.exit_code == 0, res.output
    got = persist.load(tmp_path / 'assess' / 'assessment.json')
    strict_load(tmp_path / 'assess' / 'assessment.json')
    assert got.conclusion == 'well-clusterable'


def test_analyze(tmp_path):
    res = run('analyze', '--k-min', 2, '--k-max', 5, '-o', tmp_path)
    assert res.exit_code == 0, res.output
    lines = (tmp_path / 'curve.csv').read_text().splitlines()
    assert lines[0] == 'x,g_over_r,p_single,p_approx,R,reachable'
    table = numpy.loadtxt(tmp_path / 'curve.csv', delimiter=',', skiprows=1, ndmin=2)
    assert table.shape == (4, 6)
    assert table[0, 0] == 2
    assert table[0, 2] == pytest.approx(36/37, rel=1e-12)
    assert table[0, 4] == 1

    res = run('analyze', '--regime', 'core', '--k', 3, '-o', tmp_path / 'core')
    assert res.exit_code == 0, res.output


def test_histogram(tmp_path):
    res = run('generate', 'ring', '--n', 200, '--seed', 1, '-o', tmp_path / 'ring')
    assert res.exit_code == 0, res.output
    res = run('histogram', '--bins', 20, tmp_path / 'ring' / 'dataset.csv', '-o', tmp_path / 'hist')
    assert res.exit_code == 0, res.output
    table = numpy.loadtxt(tmp_path / 'hist' / 'histogram.csv', delimiter=',', skiprows=1)
    assert table.shape == (20, 3)
    assert table[:, 2].sum() == 200*199//2


def test_preservation(tmp_path):
    res = run('preservation', '--trials', 200, '--seed', 3, '-o', tmp_path)
    assert res.exit_code == 0, res.output
    tally = persist.load(tmp_path / 'preservation.json')
    assert tally.trials == 200
    assert tally.failures == 0


def test_replay(tmp_path):
    out = planted(tmp_path)
    res = run('cluster', '--k', 3, '-R', 3, '--seed', 2, out / 'dataset.csv', '-o', tmp_path / 'run')
    assert res.exit_code == 0, res.output
    for name in ('planted', 'run'):
        res = run('replay', tmp_path / name / MANIFEST_NAME, '-o', tmp_path / (name + '-again'))
        assert res.exit_code == 0, res.output
        again = load_manifest(tmp_path / (name + '-again') / MANIFEST_NAME)
        assert again.command == load_manifest(tmp_path / name / MANIFEST_NAME).command

    res = run('replay', tmp_path / 'run' / MANIFEST_NAME, '-o', tmp_path / 'run')
    assert res.exit_code == 1

    fileio.save_dataset(out / 'dataset.csv', Dataset([(0, 0), (1, 1), (2, 2)]))
    res = run('replay', tmp_path / 'run' / MANIFEST_NAME, '-o', tmp_path / 'stale')
    assert res.exit_code == 1


def test_params_file(tmp_path):
    params = tmp_path / 'params.json'
    params.write_text(json.dumps(dict(generate=dict(plain=dict(k=2, sizes='5,5', seed=9)))))
    res = run('-c', params, 'generate', 'plain', '-o', tmp_path / 'out')
    assert res.exit_code == 0, res.output
    assert fileio.load_partition(tmp_path / 'out' / 'partition.csv').n == 10
    assert load_manifest(tmp_path / 'out' / MANIFEST_NAME).seed == 9

    res = run('-c', tmp_path / 'missing.json', 'generate', 'plain', '-o', tmp_path / 'none')
    assert res.exit_code == 1


def test_main_exit_codes(tmp_path):
    out = planted(tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(['verify', str(out / 'dataset.csv'), str(out / 'partition.csv'),
              '-o', str(tmp_path / 'v')])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        main(['verify', str(tmp_path / 'nope.csv'), str(out / 'partition.csv'),
              '-o', str(tmp_path / 'w')])
    assert exc.value.code == 1
