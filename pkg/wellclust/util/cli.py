#!/usr/bin/env python3
'''
Some helpers for __main__.py CLIs
'''
import os
import time
import logging
import functools
from collections import namedtuple

import click

from wellclust.util import jsio
from wellclust.util.manifest import make_manifest, save_manifest

log = logging.getLogger(__name__)

LOG_LEVELS = ('debug', 'info', 'warning', 'error')


class Done(namedtuple("Done", "outputs code summary")):
    '''
    What a manifested command body returns.

    :param list outputs: names of files written to the output directory.
    :param int code: process exit code.
    :param dict summary: results to record in the manifest.
    '''
    __slots__ = ()

    def __new__(cls, outputs, code=0, summary=None):
        return super().__new__(cls, list(outputs), code, summary or dict())


def setup_logging(level):
    '''
    Route wellclust log records to stderr at the given level name.
    '''
    logger = logging.getLogger('wellclust')
    logger.setLevel(level.upper())
    # stderr may have been swapped since the last call
    for old in list(logger.handlers):
        logger.removeHandler(old)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    logger.addHandler(handler)


def load_params(filename, jpath=(), tla=()):
    '''
    Return the option defaults held in a JSON or Jsonnet file.

    The document maps command names to option names to values, nested
    for command groups.
    '''
    paths = jsio.wash_path(list(jpath))
    kwds = jsio.tla_pack(tla, paths)
    if not filename.endswith(('.jsonnet', '.jsonnet.gz', '.jsonnet.bz2')):
        kwds = dict()
    params = jsio.load(filename, paths, **kwds)
    if not isinstance(params, dict):
        raise click.BadParameter(f'{filename} must hold an object keyed by command name')
    return params


def command_path(ctx):
    '''
    Return the list of command names below the root group.
    '''
    names = list()
    while ctx.parent is not None:
        names.insert(0, ctx.info_name)
        ctx = ctx.parent
    return names


# The manifested() decorator gives a command an -o/--output directory
# and writes a manifest.json there after the command body returns a
# Done.  Input file parameters are recorded as absolute paths.  Replace
# explicit output handling with:
#
# @cli.command("mycmd")
# @click.option("--seed", default=0)
# @click.argument("dataset")
# @manifested("dataset")
# def mycmd(seed, dataset, output):
#     ...
#     return Done(["out.csv"])
def manifested(*input_keys, seed_key='seed'):
    def decorator(func):
        @click.option("-o", "--output", required=True,
                      type=click.Path(file_okay=False),
                      help="Output directory, created if missing")
        @functools.wraps(func)
        def wrapper(**kwds):
            ctx = click.get_current_context()
            outdir = kwds['output']
            t0 = time.perf_counter()
            try:
                os.makedirs(outdir, exist_ok=True)
                done = func(**kwds)
                params = dict(kwds)
                for key in input_keys:
                    if params.get(key):
                        params[key] = os.path.abspath(params[key])
                inputs = [params[k] for k in input_keys if params.get(k)]
                command = (ctx.obj or dict()).get('command') or command_path(ctx)
                manifest = make_manifest(command, params, kwds.get(seed_key),
                                         inputs, outdir, done.outputs,
                                         time.perf_counter() - t0, done.summary)
                save_manifest(outdir, manifest)
            except (ValueError, OSError) as err:
                raise click.ClickException(str(err)) from err
            log.info(f'wrote {", ".join(done.outputs)} to {outdir}')
            if done.code:
                ctx.exit(done.code)
        return wrapper
    return decorator


def int_list(ctx, param, value):
    '''
    Click callback parsing "1,2,3" into a list of ints.
    '''
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f'expect comma separated integers, got "{value}"')


def float_list(ctx, param, value):
    '''
    Click callback parsing "0.1,0.2" into a list of floats.
    '''
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f'expect comma separated numbers, got "{value}"')
