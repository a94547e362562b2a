#!/usr/bin/env python3
'''
Run manifests.

Each CLI command leaves a manifest.json in its output directory
recording what was run, with which parameters and on which inputs,
and the digests of what it wrote.
'''

import os
import json
import logging
from collections import namedtuple

import numpy

from wellclust import __version__
from wellclust.util import jsio
from wellclust.util.fileio import sha256

log = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


class RunManifest(namedtuple("RunManifest", "command params seed inputs outputs summary version wall_time")):
    '''
    :param list command: command path, eg ["generate", "plain"].
    :param dict params: every command parameter by name.
    :param int seed: the RNG seed or None.
    :param dict inputs: absolute input path to SHA-256 digest.
    :param dict outputs: output file name, relative to the manifest, to
        SHA-256 digest.
    :param dict summary: command specific results, such as gaps.
    :param str version: wellclust version.
    :param float wall_time: seconds taken.
    '''
    __slots__ = ()


def _jsonable(val):
    if isinstance(val, dict):
        return {k: _jsonable(v) for k, v in val.items()}
    if isinstance(val, (list, tuple)):
        return [_jsonable(v) for v in val]
    if isinstance(val, numpy.ndarray):
        return val.tolist()
    if isinstance(val, numpy.generic):
        return val.item()
    if isinstance(val, os.PathLike):
        return os.fspath(val)
    return val


def make_manifest(command, params, seed, inputs, outdir, outputs, wall_time, summary=None):
    '''
    Return RunManifest with digests of the given files.

    Input paths are made absolute.  Output names are relative to outdir.
    '''
    ins = {os.path.abspath(p): sha256(p) for p in inputs}
    outs = {name: sha256(os.path.join(outdir, name)) for name in outputs}
    params = {k: _jsonable(v) for k, v in params.items()}
    return RunManifest(list(command), params, seed, ins, outs, _jsonable(summary or dict()),
                       __version__, wall_time)


def save_manifest(outdir, manifest):
    path = os.path.join(outdir, MANIFEST_NAME)
    jsio.dump_text(path, json.dumps(manifest._asdict(), indent=2, sort_keys=True))
    return path


def load_manifest(filename):
    '''
    Return RunManifest read from a manifest file.
    '''
    doc = jsio.load(filename)
    try:
        return RunManifest(**doc)
    except TypeError as err:
        raise ValueError(f'{filename} is not a run manifest: {err}') from err


def changed_inputs(manifest):
    '''
    Return list of input paths that are missing or whose digest changed.
    '''
    bad = list()
    for path, digest in manifest.inputs.items():
        if not os.path.exists(path) or sha256(path) != digest:
            bad.append(path)
    return bad


def compare_outputs(manifest, outdir):
    '''
    Return list of output names whose digest in outdir differs from
    the manifest.
    '''
    bad = list()
    for name, digest in sorted(manifest.outputs.items()):
        path = os.path.join(outdir, name)
        if not os.path.exists(path) or sha256(path) != digest:
            log.warning(f'output {name} differs from the manifest')
            bad.append(name)
    return bad
