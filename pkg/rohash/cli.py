# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
``rohash`` command line: enroll references, forge manipulated queries, judge
them and evaluate the detector.

Exit codes: 0 success (every query real), 1 usage, I/O or data error,
2 fake query detected, 3 empty reference database.
"""
import argparse
import contextlib
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import clogging
from .forge import (build_experiment, gen_synthetic, load_corpus, read_manifest,
                    write_corpus, write_images, QUERY_QUALITY)
from .manipulation import DEFAULT_REGION_FRACTION, load_spec_file, parse_chain
from .matcher import (EmptyDatabase, ReferenceDb, batch_min_distance_arrays,
                      judge_many, load, min_distance, save, write_judgments,
                      MAX_THRESHOLD)
from .metrics import CALIBRATIONS, evaluate
from .robust_hash import N_LO_BITS, Hash120, format_record, hash_files

__all__ = ['RunConfig', 'main', 'cmd_hash', 'cmd_enroll', 'cmd_query',
           'cmd_forge', 'cmd_gen', 'cmd_evaluate', 'cmd_bench']

logger = logging.getLogger('rohash')

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAKE = 2
EXIT_EMPTY_DB = 3

DEFAULT_THRESHOLD = 3


class RunConfig(dict):
    """Flag values of one run.  Inherits from dict but adds attribute access
    for convenience."""
    def __getattr__(self, attr):
        try:
            return self[attr]
        except KeyError:
            raise AttributeError(attr)

    def __setattr__(self, attr, val):
        self[attr] = val

    @classmethod
    def from_args(cls, args):
        config = cls((key, val) for key, val in vars(args).items() if key != 'func')
        config.threads = resolve_threads(config.get('threads'))
        return config


class UsageError(ValueError):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, '{}: error: {}\n'.format(self.prog, message))


def resolve_threads(threads):
    """``--threads`` value, else RH_THREADS, else 1"""
    if threads is None:
        env = os.environ.get('RH_THREADS')
        if env is None or env.strip() == '':
            return 1
        try:
            threads = int(env)
        except ValueError:
            raise UsageError('RH_THREADS must be an integer, got {!r}'.format(env))
    if threads < 1:
        raise UsageError('thread count must be >= 1, got {}'.format(threads))
    return threads


@contextlib.contextmanager
def _output(config):
    if config.get('output'):
        with open(config.output, 'w', encoding='utf-8', newline='') as fh:
            yield fh
    else:
        yield sys.stdout


def _need(config, name):
    if not config.get(name):
        raise UsageError('{} needs --{}'.format(config.command, name.replace('_', '-')))
    return config[name]


def _report_errors(paths, results):
    n_bad = 0
    for path, result in zip(paths, results):
        if isinstance(result, Exception):
            logger.error('error: {}: {}'.format(path, result))
            n_bad += 1
    return n_bad


def cmd_hash(config):
    """One ``<hex30> <path>`` line per input file, in input order"""
    paths = config.paths
    results = hash_files(paths, threads=config.threads, return_exceptions=True)
    with _output(config) as out:
        for path, h in zip(paths, results):
            if not isinstance(h, Exception):
                out.write(format_record(h, path) + '\n')
    return EXIT_ERROR if _report_errors(paths, results) else EXIT_OK


def cmd_enroll(config):
    db_file = Path(_need(config, 'db'))
    db = load(db_file) if db_file.exists() else ReferenceDb(source_path=db_file)
    if config.manifest:
        manifest = read_manifest(config.manifest)
        ids = manifest.query_ids
        paths = manifest.paths()
    else:
        paths = config.paths
        ids = [Path(path).stem for path in paths]
    if not paths:
        raise UsageError('enroll needs image paths or --manifest')

    results = hash_files(paths, threads=config.threads, return_exceptions=True)
    if _report_errors(paths, results):
        return EXIT_ERROR
    n_before = len(db)
    for image_id, h in zip(ids, results):
        db.add(image_id, h)
    save(db, db_file)
    logger.info('Enrolled {} images ({} entries total)'.format(len(db) - n_before, len(db)))
    return EXIT_OK


def cmd_query(config):
    db = load(_need(config, 'db'))
    if len(db) == 0:
        raise EmptyDatabase('reference database {} is empty'.format(config.db))
    paths = config.paths
    results = hash_files(paths, threads=config.threads, return_exceptions=True)
    n_bad = _report_errors(paths, results)
    good = [(path, h) for path, h in zip(paths, results) if not isinstance(h, Exception)]
    judgments = judge_many([h for _, h in good], db, config.threshold,
                           query_ids=[str(path) for path, _ in good],
                           threads=config.threads)
    with _output(config) as out:
        write_judgments(judgments, out)
    n_fake = sum(j.is_fake for j in judgments)
    logger.info('{} queries judged with d={}: {} real, {} fake'.format(
        len(judgments), config.threshold, len(judgments) - n_fake, n_fake))
    if n_bad:
        return EXIT_ERROR
    return EXIT_FAKE if n_fake else EXIT_OK


def _specs(config):
    if config.spec_file:
        return load_spec_file(config.spec_file)
    kinds = config.kind or ['copy_move']
    return [parse_chain(kind, quality=config.quality, scale=config.scale,
                        region_fraction=config.region_fraction)
            for kind in kinds]


def cmd_forge(config):
    out_dir = Path(_need(config, 'out'))
    corpus = load_corpus(read_manifest(_need(config, 'corpus')))
    experiment = build_experiment(corpus, _specs(config), config.seed,
                                  query_quality=config.query_quality,
                                  threads=config.threads)
    write_corpus(experiment.payloads, experiment.manifest, out_dir,
                 item_specs=experiment.item_specs)
    return EXIT_OK


def cmd_gen(config):
    out_dir = Path(_need(config, 'out'))
    images, manifest = gen_synthetic(config.n, config.seed, threads=config.threads)
    write_images(images, manifest, out_dir)
    return EXIT_OK


def cmd_evaluate(config):
    db = load(_need(config, 'db'))
    manifest = read_manifest(_need(config, 'manifest'))
    report = evaluate(manifest, db, d=config.threshold, calibration=config.calibration,
                      threads=config.threads, config=config)
    for line in report.summary():
        logger.info(line)
    if config.judgments:
        write_judgments(report.judgments, config.judgments)
    with _output(config) as out:
        if config.format == 'csv':
            report.curve.write(out, format='ascii.csv')
        else:
            out.write(report.to_json() + '\n')
    return EXIT_OK


def _random_words(rng, n):
    hi = rng.integers(0, np.iinfo(np.uint64).max, size=n, dtype=np.uint64, endpoint=True)
    lo = rng.integers(0, (1 << N_LO_BITS) - 1, size=n, dtype=np.uint64, endpoint=True)
    return hi, lo


def cmd_bench(config):
    """Time the packed search path against the numpy scalar path"""
    if config.db_size < 1 or config.queries < 1:
        raise UsageError('bench needs --db-size and --queries >= 1')
    if config.scalar_limit is not None and config.scalar_limit < 1:
        raise UsageError('bench needs --scalar-limit >= 1')
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    db = ReferenceDb.from_packed(*_random_words(rng, config.db_size))
    q_hi, q_lo = _random_words(rng, config.queries)

    t0 = time.perf_counter()
    batch_min_distance_arrays((q_hi[:1], q_lo[:1]), db, threads=config.threads)
    compile_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    dists, index = batch_min_distance_arrays((q_hi, q_lo), db, threads=config.threads)
    packed_seconds = time.perf_counter() - t0

    n_scalar = config.queries
    if config.scalar_limit is not None:
        n_scalar = min(config.scalar_limit, config.queries)
    ids = db.ids
    t0 = time.perf_counter()
    scalar = [min_distance(Hash120.from_words(q_hi[i], q_lo[i]), db) for i in range(n_scalar)]
    scalar_seconds = time.perf_counter() - t0
    equal = all(dist == dists[i] and image_id == ids[index[i]]
                for i, (dist, image_id) in enumerate(scalar))

    digest = hashlib.sha256(dists.astype('<i8').tobytes() + index.astype('<i8').tobytes())
    result = dict(db_size=config.db_size, queries=config.queries, seed=config.seed,
                  threads=config.threads,
                  compile_seconds=round(compile_seconds, 4),
                  packed_seconds=round(packed_seconds, 4),
                  queries_per_second=round(config.queries / max(packed_seconds, 1e-9), 1),
                  scalar_queries=n_scalar,
                  scalar_coverage=('all' if n_scalar == config.queries
                                   else 'first {}'.format(n_scalar)),
                  scalar_seconds=round(scalar_seconds, 4),
                  equal=equal,
                  digest=digest.hexdigest(),
                  config=dict(config))
    logger.info('packed path: {} x {} in {:.3f} s; scalar path: {} queries in {:.3f} s'
                .format(config.queries, config.db_size, packed_seconds, n_scalar,
                        scalar_seconds))
    with _output(config) as out:
        out.write(json.dumps(result, indent=1) + '\n')
    if not equal:
        logger.error('error: packed and scalar search paths disagree')
        return EXIT_ERROR
    return EXIT_OK


def get_options(argv=None):
    common = ArgumentParser(add_help=False)
    common.add_argument("--seed",
                        type=int,
                        default=0,
                        help="Random seed (default=0)")
    common.add_argument("--threads",
                        type=int,
                        help="Worker threads (default=$RH_THREADS or 1)")
    common.add_argument("--db",
                        help="Reference database file")
    common.add_argument("--output",
                        help="Output file (default=stdout)")
    common.add_argument("--format",
                        choices=('json', 'csv'),
                        default='json',
                        help="Report format (default=json)")
    common.add_argument("--quiet",
                        action='store_true',
                        help="Only log warnings and errors")
    common.add_argument("--verbose",
                        action='store_true',
                        help="Log debug detail")
    common.add_argument("--log-file",
                        help="Also log (at debug level) to this file")

    parser = ArgumentParser(prog='rohash',
                            description='Robust-hash fake image detection')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    sub = subparsers.add_parser('hash', parents=[common], help='Print image hashes')
    sub.add_argument('paths', nargs='+', help='PNG or JPEG files')
    sub.set_defaults(func=cmd_hash)

    sub = subparsers.add_parser('enroll', parents=[common],
                                help='Add reference images to the database')
    sub.add_argument('paths', nargs='*', help='PNG or JPEG files (id = file stem)')
    sub.add_argument('--manifest', help='Enroll the rows of this manifest (id = query_id)')
    sub.set_defaults(func=cmd_enroll)

    sub = subparsers.add_parser('query', parents=[common],
                                help='Judge images real or fake')
    sub.add_argument('paths', nargs='+', help='PNG or JPEG files')
    sub.add_argument('--threshold', type=int, default=DEFAULT_THRESHOLD,
                     choices=range(MAX_THRESHOLD + 1), metavar='d',
                     help='Hamming threshold d (default={})'.format(DEFAULT_THRESHOLD))
    sub.set_defaults(func=cmd_query)

    sub = subparsers.add_parser('forge', parents=[common],
                                help='Write manipulated query images and their manifest')
    sub.add_argument('--corpus', help='Manifest of the reference images')
    sub.add_argument('--kind', action='append',
                     help='none, jpeg, resize, copy_move, splice or a chain like '
                          'copy_move+jpeg (repeatable, default=copy_move)')
    sub.add_argument('--quality', type=int, default=70, help='JPEG quality (default=70)')
    sub.add_argument('--scale', type=float, default=0.5, help='Resize factor (default=0.5)')
    sub.add_argument('--region-fraction', type=float, default=DEFAULT_REGION_FRACTION,
                     help='Tamper rectangle side fraction (default={})'
                          .format(DEFAULT_REGION_FRACTION))
    sub.add_argument('--query-quality', type=int, default=QUERY_QUALITY,
                     help='JPEG quality of every query (default={})'.format(QUERY_QUALITY))
    sub.add_argument('--spec-file', help='JSON list of manipulation specs')
    sub.add_argument('--out', help='Output directory')
    sub.set_defaults(func=cmd_forge)

    sub = subparsers.add_parser('gen', parents=[common], help='Write a synthetic corpus')
    sub.add_argument('--n', type=int, default=200, help='Number of images (default=200)')
    sub.add_argument('--out', help='Output directory')
    sub.set_defaults(func=cmd_gen)

    sub = subparsers.add_parser('evaluate', parents=[common],
                                help='Score the detector on a query manifest')
    sub.add_argument('--manifest', help='Query manifest')
    sub.add_argument('--threshold', type=int, choices=range(MAX_THRESHOLD + 1),
                     metavar='d', help='Fixed threshold (default=EER threshold)')
    sub.add_argument('--calibration', choices=CALIBRATIONS, default='pooled',
                     help='EER threshold per manipulation row or pooled (default=pooled)')
    sub.add_argument('--judgments', help='Also write per-query judgments CSV here')
    sub.set_defaults(func=cmd_evaluate)

    sub = subparsers.add_parser('bench', parents=[common],
                                help='Time packed vs scalar search')
    sub.add_argument('--db-size', type=int, default=100000, help='Reference entries')
    sub.add_argument('--queries', type=int, default=1000, help='Query hashes')
    sub.add_argument('--scalar-limit', type=int,
                     help='Only check the first N queries on the scalar path '
                          '(default=all)')
    sub.set_defaults(func=cmd_bench)

    return parser.parse_args(argv)


def main(argv=None):
    """Run one ``rohash`` command and return its exit code"""
    args = get_options(argv)
    level = clogging.INFO
    if args.quiet:
        level = clogging.WARNING
    if args.verbose:
        level = clogging.DEBUG
    clogging.config_logger('rohash', stream=sys.stderr, level=level,
                           filename=args.log_file, filelevel=clogging.DEBUG)

    try:
        config = RunConfig.from_args(args)
        logger.info('rohash {}: {}'.format(config.command, json.dumps(config, default=str)))
        return args.func(config)
    except EmptyDatabase as err:
        logger.error('error: {}'.format(err))
        return EXIT_EMPTY_DB
    except (OSError, ValueError) as err:
        logger.error('error: {}'.format(err))
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
