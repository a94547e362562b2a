#!/usr/bin/env python3
'''
Some utility functions for dealing with file I/O.

Datasets are CSV files with one row per point and one column per
coordinate.  Partitions are CSV files with one integer label per row.
Every file is written to a temporary sibling and renamed into place.
'''

import os
import hashlib
import tempfile
from contextlib import contextmanager

import numpy

# round trips float64 exactly
FLOAT_FORMAT = '%.17g'


@contextmanager
def atomic_open(filename, mode='w'):
    '''
    Yield a file object whose content replaces filename on success.
    '''
    path = os.path.abspath(filename)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path),
                               prefix='.' + os.path.basename(path), suffix='.tmp')
    try:
        with os.fdopen(fd, mode) as fp:
            yield fp
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256(filename, blocksize=1 << 16):
    '''
    Return hex SHA-256 digest of a file's bytes.
    '''
    digest = hashlib.sha256()
    with open(filename, 'rb') as fp:
        for block in iter(lambda: fp.read(blocksize), b''):
            digest.update(block)
    return digest.hexdigest()


def _loadtxt(filename, what, ndmin):
    '''
    Return numbers of a CSV file, skipping one header line if present.
    '''
    try:
        return numpy.loadtxt(filename, delimiter=',', ndmin=ndmin, dtype='float64')
    except ValueError:
        pass
    try:
        return numpy.loadtxt(filename, delimiter=',', ndmin=ndmin, dtype='float64',
                             skiprows=1)
    except ValueError as err:
        raise ValueError(f'can not parse {what} {filename}: {err}') from err


def load_dataset(filename):
    '''
    Return Dataset read from a CSV file.
    '''
    from wellclust.geometry import Dataset
    pts = _loadtxt(filename, 'dataset', 2)
    if pts.size == 0:
        raise ValueError(f'dataset {filename} is empty')
    return Dataset(pts)


def save_dataset(filename, dataset):
    with atomic_open(filename, 'w') as fp:
        numpy.savetxt(fp, dataset.points, fmt=FLOAT_FORMAT, delimiter=',')


def load_partition(filename, k=None):
    '''
    Return Partition read from a CSV file of labels.
    '''
    from wellclust.geometry import Partition
    labels = _loadtxt(filename, 'partition', 1)
    if labels.ndim != 1:
        raise ValueError(f'partition {filename} must have one label per row')
    return Partition(labels, k)


def save_partition(filename, partition):
    with atomic_open(filename, 'w') as fp:
        numpy.savetxt(fp, partition.labels, fmt='%d')


def save_table(filename, rows, columns):
    '''
    Write namedtuple rows as CSV with a header of column names.
    '''
    table = numpy.array([[float(getattr(row, c)) for c in columns] for row in rows],
                        dtype='float64').reshape(-1, len(columns))
    with atomic_open(filename, 'w') as fp:
        numpy.savetxt(fp, table, fmt=FLOAT_FORMAT, delimiter=',',
                      header=','.join(columns), comments='')
