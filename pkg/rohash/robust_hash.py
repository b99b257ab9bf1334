# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
120-bit robust image hash built from spatial and chromatic block statistics
of the preprocessed (128x128, Gaussian filtered, YCbCr) image.

Feature layout, in hash bit order::

  bits   1..64   8x8 block means of Y
  bits  65..80   4x4 block means of Cb
  bits  81..96   4x4 block means of Cr
  bits  97..112  4x4 block standard deviations of Y
  bits 113..120  means of the eight 16-row horizontal bands of Y

Each group is quantized against its own median.
"""
import logging
import re
from collections import OrderedDict
from multiprocessing.pool import ThreadPool
from pathlib import Path

import numpy as np

from .imageprep import HASH_SIZE, preprocess, decode_image

__all__ = ['ParseError', 'Hash120', 'FeatureVector', 'FEATURE_GROUPS',
           'block_stats', 'bits_vs_median', 'extract_features',
           'compute_hash', 'hash_bytes', 'hash_file', 'hash_files',
           'to_hex', 'parse_hex', 'format_record', 'parse_record']

logger = logging.getLogger('rohash')

N_BITS = 120
N_HEX = N_BITS // 4
N_LO_BITS = 56
LO_MASK = (1 << N_LO_BITS) - 1

FEATURE_GROUPS = OrderedDict([('luma_means_8x8', 64),
                              ('cb_means_4x4', 16),
                              ('cr_means_4x4', 16),
                              ('luma_stddev_4x4', 16),
                              ('luma_band_means', 8)])
N_BANDS = 8

HEX_RE = re.compile(r'[0-9a-fA-F]{%d}' % N_HEX)


class ParseError(ValueError):
    pass


class Hash120(object):
    """Immutable 120-bit robust hash.

    Bits are numbered 1..120; bit 1 is the most significant bit of
    ``value`` and of the first hex digit.  Subtracting two hashes gives
    their Hamming distance.

    Parameters
    ----------
    value : int
        integer in 0 .. 2**120 - 1
    """
    __slots__ = ('_value',)

    def __init__(self, value):
        value = int(value)
        if not 0 <= value < (1 << N_BITS):
            raise ValueError('hash value must fit in {} bits'.format(N_BITS))
        object.__setattr__(self, '_value', value)

    def __setattr__(self, attr, val):
        raise AttributeError('Hash120 is immutable')

    value = property(lambda self: self._value)

    # Packed words: bits 1..64 and bits 65..120
    hi = property(lambda self: self._value >> N_LO_BITS)
    lo = property(lambda self: self._value & LO_MASK)

    @classmethod
    def from_bits(cls, bits):
        bits = np.asarray(bits, dtype=np.uint8).ravel()
        if bits.shape != (N_BITS,):
            raise ValueError('expected {} bits, got {}'.format(N_BITS, bits.size))
        if np.any(bits > 1):
            raise ValueError('bits must be 0 or 1')
        return cls(int.from_bytes(np.packbits(bits).tobytes(), 'big'))

    @classmethod
    def from_words(cls, hi, lo):
        return cls((int(hi) << N_LO_BITS) | int(lo))

    @property
    def bits(self):
        """uint8 array of the 120 bits, bit 1 first"""
        raw = np.frombuffer(self._value.to_bytes(N_BITS // 8, 'big'), dtype=np.uint8)
        return np.unpackbits(raw)

    def __len__(self):
        return N_BITS

    def __sub__(self, other):
        if not isinstance(other, Hash120):
            return NotImplemented
        return (self._value ^ other._value).bit_count()

    def __eq__(self, other):
        if not isinstance(other, Hash120):
            return NotImplemented
        return self._value == other._value

    def __hash__(self):
        return hash(self._value)

    def __str__(self):
        return to_hex(self)

    def __repr__(self):
        return 'Hash120({!r})'.format(to_hex(self))


class FeatureVector(object):
    """The 120 real-valued features of one image, grouped as in
    ``FEATURE_GROUPS``."""
    def __init__(self, luma_means_8x8, cb_means_4x4, cr_means_4x4,
                 luma_stddev_4x4, luma_band_means):
        groups = (luma_means_8x8, cb_means_4x4, cr_means_4x4,
                  luma_stddev_4x4, luma_band_means)
        for (name, size), vals in zip(FEATURE_GROUPS.items(), groups):
            vals = np.asarray(vals, dtype=np.float64).ravel()
            if vals.shape != (size,):
                raise ValueError('{} needs {} values, got {}'.format(name, size, vals.size))
            if not np.all(np.isfinite(vals)):
                raise ValueError('{} has non-finite values'.format(name))
            setattr(self, name, vals)

    @property
    def groups(self):
        return [getattr(self, name) for name in FEATURE_GROUPS]

    @property
    def values(self):
        return np.concatenate(self.groups)


def block_stats(plane, grid, mode='mean'):
    """Statistics of a ``grid`` x ``grid`` partition of a square plane.

    Parameters
    ----------
    plane : ndarray
        2-d square plane (normally 128x128)
    grid : int
        blocks per side (4 or 8)
    mode : str
        'mean' or 'std' (population standard deviation)

    Returns
    -------
    ndarray
        ``grid**2`` values in row-major block order
    """
    plane = np.asarray(plane, dtype=np.float64)
    n_rows, n_cols = plane.shape
    if grid < 1 or n_rows % grid or n_cols % grid:
        raise ValueError('grid {} does not divide a {}x{} plane'.format(grid, n_rows, n_cols))
    blocks = plane.reshape(grid, n_rows // grid, grid, n_cols // grid).swapaxes(1, 2)
    blocks = blocks.reshape(grid * grid, -1)
    if mode == 'mean':
        return blocks.mean(axis=1)
    elif mode == 'std':
        return blocks.std(axis=1)
    raise ValueError("mode must be 'mean' or 'std', got {!r}".format(mode))


def bits_vs_median(values):
    """1 where a value is strictly greater than the median of ``values``.

    For an even count the median is the mean of the two middle order
    statistics, so all-equal input gives all-zero bits.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError('bits_vs_median needs at least one value')
    return (values > np.median(values)).astype(np.uint8)


def extract_features(planes):
    """FeatureVector from preprocessed ``PlanarYCbCr`` planes"""
    band_rows = HASH_SIZE // N_BANDS
    return FeatureVector(
        luma_means_8x8=block_stats(planes.y, 8, 'mean'),
        cb_means_4x4=block_stats(planes.cb, 4, 'mean'),
        cr_means_4x4=block_stats(planes.cr, 4, 'mean'),
        luma_stddev_4x4=block_stats(planes.y, 4, 'std'),
        luma_band_means=planes.y.reshape(N_BANDS, band_rows * HASH_SIZE).mean(axis=1))


def compute_hash(img):
    """Robust hash of a ``RasterImage`` of any size"""
    features = extract_features(preprocess(img))
    bits = np.concatenate([bits_vs_median(group) for group in features.groups])
    return Hash120.from_bits(bits)


def hash_bytes(data):
    return compute_hash(decode_image(data))


def hash_file(path):
    path = Path(path)
    h = hash_bytes(path.read_bytes())
    logger.debug('{} {}'.format(to_hex(h), path))
    return h


def _hash_file_or_error(path):
    try:
        return hash_file(path)
    except (OSError, ValueError) as err:
        return err


def hash_files(paths, threads=1, return_exceptions=False):
    """Hash image files, fanning out over ``threads`` worker threads.

    Results come back in input order.  With ``return_exceptions`` a file
    that cannot be read or decoded yields its exception in place of a hash,
    otherwise the first such exception is raised.
    """
    paths = list(paths)
    func = _hash_file_or_error if return_exceptions else hash_file
    if threads is None or threads <= 1 or len(paths) <= 1:
        return [func(path) for path in paths]
    with ThreadPool(min(threads, len(paths))) as pool:
        return pool.map(func, paths)


def to_hex(h):
    """30 lower-case hex digits, bit 1 = MSB of the first digit"""
    return format(h.value, '0{}x'.format(N_HEX))


def parse_hex(text):
    if not isinstance(text, str) or not HEX_RE.fullmatch(text):
        raise ParseError('expected {} hex characters, got {!r}'.format(N_HEX, text))
    return Hash120(int(text, 16))


def format_record(h, image_id):
    """``<hex30> <image-id>`` record line (without line ending)"""
    return '{} {}'.format(to_hex(h), image_id)


def parse_record(line, lineno=None):
    """Parse a ``<hex30> <image-id>`` record into ``(Hash120, image_id)``"""
    where = '' if lineno is None else 'line {}: '.format(lineno)
    line = line.rstrip('\n')
    hex_part, sep, image_id = line.partition(' ')
    if not sep or not image_id:
        raise ParseError('{}expected "<hex{}> <image-id>", got {!r}'.format(where, N_HEX, line))
    try:
        h = parse_hex(hex_part)
    except ParseError as err:
        raise ParseError('{}{}'.format(where, err))
    return h, image_id
