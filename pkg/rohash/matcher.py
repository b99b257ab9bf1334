# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
Hamming matching of query hashes against a reference database and the
real / fake decision::

  real  if  min_u d_H(u, q) <  d
  fake  if  min_u d_H(u, q) >= d
"""
import io
import logging
from pathlib import Path

import numpy as np
from astropy.table import Table

from . import core
from .robust_hash import (Hash120, ParseError, compute_hash, format_record,
                          parse_record, N_BITS, LO_MASK, N_LO_BITS)

__all__ = ['EmptyDatabase', 'DuplicateId', 'ReferenceDb', 'Judgment',
           'hamming', 'min_distance', 'judge', 'judge_many', 'enroll', 'save',
           'load', 'batch_min_distance', 'judgments_table', 'write_judgments',
           'MAX_THRESHOLD', 'REAL', 'FAKE']

logger = logging.getLogger('rohash')

REAL = 'real'
FAKE = 'fake'

# Largest meaningful threshold: every distance 0..120 is < 121
MAX_THRESHOLD = N_BITS + 1

JUDGMENT_COLUMNS = ('query_id', 'min_distance', 'nearest_id', 'verdict', 'threshold')


class EmptyDatabase(ValueError):
    pass


class DuplicateId(ValueError):
    pass


class ReferenceDb(object):
    """Ordered collection of ``(image_id, Hash120)`` reference entries.

    Image ids are unique and entry order is enrollment order.  Hashes are
    kept as packed ``hi`` / ``lo`` words (see ``rohash.core``) and the
    numpy arrays used by the search paths are rebuilt lazily after
    additions.

    Parameters
    ----------
    entries : iterable of (str, Hash120), None
        initial entries
    source_path : str, Path, None
        file this database was loaded from
    """
    def __init__(self, entries=None, source_path=None):
        self.source_path = None if source_path is None else Path(source_path)
        self._ids = []
        self._index = {}
        self._hi = []
        self._lo = []
        self._packed = None
        for image_id, h in (entries or ()):
            self.add(image_id, h)

    @classmethod
    def from_packed(cls, hi, lo, ids=None):
        """Build a database straight from packed word arrays.

        Parameters
        ----------
        hi : ndarray
            uint64 words holding bits 1..64
        lo : ndarray
            uint64 words holding bits 65..120
        ids : list of str, None
            entry ids (default ``r0000000``, ``r0000001``, ...)
        """
        hi = np.ascontiguousarray(hi, dtype=np.uint64)
        lo = np.ascontiguousarray(lo, dtype=np.uint64)
        if hi.shape != lo.shape or hi.ndim != 1:
            raise ValueError('hi and lo must be 1-d arrays of equal length')
        if np.any(lo > np.uint64(LO_MASK)):
            raise ValueError('lo words must fit in {} bits'.format(N_LO_BITS))
        if ids is None:
            ids = ['r{:07d}'.format(i) for i in range(len(hi))]
        ids = [str(x) for x in ids]
        if len(ids) != len(hi):
            raise ValueError('need one id per entry')

        db = cls()
        db._index = {}
        for pos, image_id in enumerate(ids):
            if image_id in db._index:
                raise DuplicateId('duplicate image id {!r}'.format(image_id))
            db._index[image_id] = pos
        db._ids = ids
        db._hi = hi.tolist()
        db._lo = lo.tolist()
        db._packed = (hi, lo)
        return db

    def add(self, image_id, h):
        """Append ``(image_id, h)``; ``DuplicateId`` if the id is present"""
        image_id = str(image_id)
        if not image_id or '\n' in image_id or '\r' in image_id:
            raise ValueError('image id must be non-empty and single-line: {!r}'.format(image_id))
        if image_id in self._index:
            raise DuplicateId('duplicate image id {!r}'.format(image_id))
        if not isinstance(h, Hash120):
            raise TypeError('expected Hash120, got {}'.format(type(h).__name__))
        self._index[image_id] = len(self._ids)
        self._ids.append(image_id)
        self._hi.append(h.hi)
        self._lo.append(h.lo)
        self._packed = None

    @property
    def packed(self):
        """``(hi, lo)`` uint64 arrays in entry order"""
        if self._packed is None:
            self._packed = (np.array(self._hi, dtype=np.uint64),
                            np.array(self._lo, dtype=np.uint64))
        return self._packed

    ids = property(lambda self: list(self._ids))

    @property
    def entries(self):
        return list(self)

    def get(self, image_id):
        pos = self._index[image_id]
        return Hash120.from_words(self._hi[pos], self._lo[pos])

    __getitem__ = get

    def __contains__(self, image_id):
        return image_id in self._index

    def __len__(self):
        return len(self._ids)

    def __iter__(self):
        for image_id, hi, lo in zip(self._ids, self._hi, self._lo):
            yield image_id, Hash120.from_words(hi, lo)

    def __eq__(self, other):
        if not isinstance(other, ReferenceDb):
            return NotImplemented
        return (self._ids == other._ids and self._hi == other._hi
                and self._lo == other._lo)

    def __repr__(self):
        return '<ReferenceDb {} entries>'.format(len(self))

    def save(self, path):
        save(self, path)


class Judgment(object):
    """Verdict for one query hash.

    ``verdict`` is 'real' iff ``min_distance < threshold_used``.
    """
    def __init__(self, query_id, min_distance, nearest_id, threshold_used):
        min_distance = int(min_distance)
        if not 0 <= min_distance <= N_BITS:
            raise ValueError('min_distance must be in 0..{}'.format(N_BITS))
        self.query_id = str(query_id)
        self.min_distance = min_distance
        self.nearest_id = nearest_id
        self.threshold_used = int(threshold_used)

    @property
    def verdict(self):
        return REAL if self.min_distance < self.threshold_used else FAKE

    is_fake = property(lambda self: self.verdict == FAKE)

    def as_row(self):
        return (self.query_id, self.min_distance, self.nearest_id,
                self.verdict, self.threshold_used)

    def __repr__(self):
        return ('<Judgment {} {} (distance {} to {}, d={})>'
                .format(self.query_id, self.verdict, self.min_distance,
                        self.nearest_id, self.threshold_used))


def hamming(u, q):
    """Number of bit positions where ``u`` and ``q`` differ"""
    return (u.value ^ q.value).bit_count()


def _check_threshold(d):
    d = int(d)
    if not 0 <= d <= MAX_THRESHOLD:
        raise ValueError('threshold d must be in 0..{}, got {}'.format(MAX_THRESHOLD, d))
    return d


def distances(q, db):
    """Distances from ``q`` to every entry, in entry order (numpy path)"""
    hi, lo = db.packed
    return (core.bit_count64(hi ^ np.uint64(q.hi))
            + core.bit_count64(lo ^ np.uint64(q.lo))).astype(np.int64)


def min_distance(q, db, exclude_id=None, exclude_self=False):
    """Smallest Hamming distance from ``q`` to the database entries.

    Parameters
    ----------
    q : Hash120
        query hash
    db : ReferenceDb
    exclude_id : str, None
        skip the entry with this id (leave-one-out evaluation)
    exclude_self : bool
        skip entries whose hash is bit-identical to ``q``

    Returns
    -------
    tuple
        (distance, image_id); ties go to the first entry in database order
    """
    if len(db) == 0:
        raise EmptyDatabase('reference database is empty')
    dists = distances(q, db)
    if exclude_id is not None and exclude_id in db:
        dists[db._index[exclude_id]] = core.NO_MATCH
    if exclude_self:
        dists[dists == 0] = core.NO_MATCH
    pos = int(np.argmin(dists))
    if dists[pos] == core.NO_MATCH:
        raise EmptyDatabase('no reference entries left after exclusion')
    return int(dists[pos]), db._ids[pos]


def judge(q, db, d, query_id='', exclude_id=None):
    """Judge ``q`` real or fake against ``db`` with threshold ``d``"""
    d = _check_threshold(d)
    dist, nearest_id = min_distance(q, db, exclude_id=exclude_id)
    return Judgment(query_id, dist, nearest_id, d)


def enroll(db, image_id, img):
    """Hash ``img`` and append it to ``db`` under ``image_id``"""
    db.add(image_id, compute_hash(img))
    return db


def batch_min_distance(queries, db, threads=None):
    """``min_distance`` for many queries using the packed popcount kernel.

    Parameters
    ----------
    queries : sequence of Hash120, or tuple of (hi, lo) uint64 arrays
    db : ReferenceDb
    threads : int, None
        numba worker threads (None keeps the current setting)

    Returns
    -------
    list of (int, str)
    """
    dists, index = batch_min_distance_arrays(queries, db, threads=threads)
    ids = db._ids
    return [(int(dist), ids[pos]) for dist, pos in zip(dists, index)]


def batch_min_distance_arrays(queries, db, threads=None):
    """As ``batch_min_distance`` but returns ``(distances, entry_indices)``
    int64 arrays."""
    if len(db) == 0:
        raise EmptyDatabase('reference database is empty')
    if isinstance(queries, tuple) and len(queries) == 2 and isinstance(queries[0], np.ndarray):
        q_hi, q_lo = (np.ascontiguousarray(x, dtype=np.uint64) for x in queries)
    else:
        queries = list(queries)
        q_hi = np.array([q.hi for q in queries], dtype=np.uint64)
        q_lo = np.array([q.lo for q in queries], dtype=np.uint64)
    db_hi, db_lo = db.packed
    out_dist = np.empty(len(q_hi), dtype=np.int64)
    out_index = np.empty(len(q_hi), dtype=np.int64)
    core.set_threads(threads)
    core.min_distance_kernel(q_hi, q_lo, db_hi, db_lo, out_dist, out_index)
    return out_dist, out_index


def judge_many(queries, db, d, query_ids=None, threads=None):
    """Judgments for many queries via the packed search path"""
    d = _check_threshold(d)
    queries = list(queries)
    if query_ids is None:
        query_ids = [str(i) for i in range(len(queries))]
    results = batch_min_distance(queries, db, threads=threads)
    return [Judgment(query_id, dist, nearest_id, d)
            for query_id, (dist, nearest_id) in zip(query_ids, results)]


def save(db, path):
    """Write ``db`` as one ``<hex30> <image-id>`` line per entry (LF endings)"""
    path = Path(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        for image_id, h in db:
            fh.write(format_record(h, image_id) + '\n')
    logger.info('Wrote {} reference entries to {}'.format(len(db), path))


def load(path):
    """Read a reference database written by ``save``"""
    path = Path(path)
    db = ReferenceDb(source_path=path)
    with open(path, 'r', encoding='utf-8', newline='') as fh:
        text = fh.read()
    lines = text.split('\n')
    if lines and lines[-1] == '':
        lines.pop()
    for lineno, line in enumerate(lines, 1):
        h, image_id = parse_record(line, lineno=lineno)
        try:
            db.add(image_id, h)
        except ValueError as err:
            raise ParseError('line {}: {}'.format(lineno, err))
    logger.debug('Read {} reference entries from {}'.format(len(db), path))
    return db


def judgments_table(judgments):
    rows = [j.as_row() for j in judgments]
    if rows:
        return Table(rows=rows, names=JUDGMENT_COLUMNS)
    return Table(names=JUDGMENT_COLUMNS, dtype=(str, int, str, str, int))


def write_judgments(judgments, output):
    """Write judgments as CSV to a path or an open text stream"""
    table = judgments_table(judgments)
    if isinstance(output, (str, Path)):
        table.write(str(output), format='ascii.csv', overwrite=True)
    else:
        buf = io.StringIO()
        table.write(buf, format='ascii.csv')
        output.write(buf.getvalue())
