#!/usr/bin/env python3
'''
Convert result objects to and from JSON-able data.

Result types are namedtuples.  Each is marked up as a single key dict
named after its type and numpy arrays are marked up as
{"array": {"shape": ..., "elements": ...}} so fromdict() can undo
todict().  NaN, such as the unused diagonal of a pair matrix, is
written as null.  Documents written by dump() carry a schema_version
and are strict JSON.
'''

import json
import math

import numpy

from wellclust.util import jsio

SCHEMA_VERSION = 1


def _types():
    from wellclust import geometry, engine, verifier, analytics, generators, oracle
    mods = (geometry, engine, verifier, analytics, generators, oracle)
    names = ('Dataset', 'Partition', 'ClusterStats', 'GapReport',
             'SeedSet', 'RunResult',
             'GapRequirement', 'CoreProfile', 'ClusterabilityVerdict',
             'CorePreservationConfig', 'PreservationTally', 'Assessment',
             'SeedingAnalysis', 'CurveRow', 'SeedingRate',
             'PlantedDataset', 'CounterexampleReport', 'Histogram',
             'OracleResult')
    ret = dict()
    for mod in mods:
        for name in names:
            if hasattr(mod, name):
                ret[name] = getattr(mod, name)
    return ret


def _denan(val):
    if isinstance(val, float) and math.isnan(val):
        return None
    return val


def todict(obj):
    '''
    Return a JSON-able representation of obj marked up for type.
    '''
    if hasattr(obj, '_asdict'):
        cname = type(obj).__name__
        return {cname: {k: todict(v) for k, v in obj._asdict().items()}}
    if isinstance(obj, numpy.ndarray):
        shape = list(obj.shape)
        elements = [_denan(ele) for ele in obj.flatten().tolist()]
        return dict(array=dict(shape=shape, elements=elements))
    if isinstance(obj, (list, tuple)):
        return [todict(ele) for ele in obj]
    if isinstance(obj, dict):
        return {k: todict(v) for k, v in obj.items()}
    if isinstance(obj, numpy.generic):
        return _denan(obj.item())
    return _denan(obj)


def fromdict(obj, types=None):
    '''
    Undo `todict()`.
    '''
    if types is None:
        types = _types()
    if isinstance(obj, dict):

        if set(obj) == {'array'}:
            elements = obj['array']['elements']
            if any(ele is None for ele in elements):
                ret = numpy.array(elements, dtype=float)
            else:
                ret = numpy.asarray(elements)
            return ret.reshape(obj['array']['shape'])

        if len(obj) == 1:
            tname = next(iter(obj))
            if tname in types:
                return types[tname](**{k: fromdict(v, types) for k, v in obj[tname].items()})

        return {k: fromdict(v, types) for k, v in obj.items()}

    if isinstance(obj, list):
        return [fromdict(ele, types) for ele in obj]

    return obj


def dumps(obj):
    '''
    Dump object to JSON text with a schema version.
    '''
    doc = dict(schema_version=SCHEMA_VERSION, data=todict(obj))
    return json.dumps(doc, indent=2, allow_nan=False)


def loads(text):
    '''
    Load object from JSON text.
    '''
    doc = json.loads(text)
    version = doc.get('schema_version')
    if version != SCHEMA_VERSION:
        raise ValueError(f'unsupported schema version: {version}')
    return fromdict(doc['data'])


def dump(filename, obj):
    '''
    Save a result object to a .json, .json.gz or .json.bz2 file.
    '''
    jsio.dump_text(filename, dumps(obj))


def load(filename):
    '''
    Return the result object saved in the file of the given name.
    '''
    return loads(jsio.load_text(filename))
