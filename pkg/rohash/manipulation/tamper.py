# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
Local tampering: copy-move within an image and splicing from a donor.

Both paste one rectangle and leave every other pixel untouched.  Of the
seeded candidate placements the one that changes the mean colour of the
pasted area most is used.  All random choices come from a generator seeded
with the manipulation seed.
"""
import numpy as np

from ..imageprep import RasterImage
from .base import (Manipulation, DEFAULT_REGION_FRACTION, make_rng,
                   round_half_up)

__all__ = ['DonorTooSmall', 'region_size', 'copy_move', 'splice',
           'CopyMove', 'Splice']

# Placements drawn per tamper: sources, and destinations per source
N_CANDIDATES = 16


class DonorTooSmall(ValueError):
    pass


def _check_fraction(region_fraction, upper, inclusive):
    region_fraction = float(region_fraction)
    ok = (0 < region_fraction <= upper) if inclusive else (0 < region_fraction < upper)
    if not ok:
        raise ValueError('region_fraction must be in (0, {}{}, got {}'.format(
            upper, ']' if inclusive else ')', region_fraction))
    return region_fraction


def region_size(width, height, region_fraction):
    """Rectangle ``(width, height)`` for ``region_fraction``, at least 1x1 and
    clamped to the image"""
    rw = min(width, max(1, round_half_up(region_fraction * width)))
    rh = min(height, max(1, round_half_up(region_fraction * height)))
    return rw, rh


def _paste(img, src, sx, sy, dx, dy, rw, rh):
    data = img.copy_data()
    data[dy:dy + rh, dx:dx + rw] = src.data[sy:sy + rh, sx:sx + rw]
    return RasterImage(data)


def _patch_means(data, xs, ys, rw, rh):
    """Mean colour of the ``rw`` x ``rh`` rectangles with top-left corners
    ``(xs, ys)``; shape ``xs.shape + (3,)``"""
    csum = np.zeros((data.shape[0] + 1, data.shape[1] + 1, data.shape[2]))
    csum[1:, 1:] = data.astype(np.float64).cumsum(axis=0).cumsum(axis=1)
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    total = (csum[ys + rh, xs + rw] - csum[ys, xs + rw]
             - csum[ys + rh, xs] + csum[ys, xs])
    return total / (rw * rh)


def _colour_change(src_means, dst_means):
    return np.abs(src_means - dst_means).sum(axis=-1)


def _destinations(rng, width, height, rw, rh, sx, sy, n):
    """``n`` destination corners drawn uniformly from the positions that do
    not overlap the source at ``(sx, sy)``, or from all positions other than
    the source when none are clear."""
    xs = np.arange(width - rw + 1)
    ys = np.arange(height - rh + 1)
    x_clear = (xs + rw <= sx) | (xs >= sx + rw)
    y_clear = (ys + rh <= sy) | (ys >= sy + rh)
    ok = y_clear[:, np.newaxis] | x_clear[np.newaxis, :]
    if not ok.any():
        ok = np.ones((len(ys), len(xs)), dtype=bool)
        ok[sy, sx] = False
    candidates = np.flatnonzero(ok)
    dys, dxs = np.unravel_index(candidates[rng.integers(len(candidates), size=n)], ok.shape)
    return dxs, dys


def copy_move(img, seed, region_fraction=DEFAULT_REGION_FRACTION):
    """Copy a seeded random rectangle of ``img`` to another position.

    The rectangle is ``region_fraction`` of each side.  ``N_CANDIDATES``
    source corners are drawn, each with ``N_CANDIDATES`` destinations that
    do not overlap it (any position but the source when none exist).  The
    pair whose mean colours differ most is used; ties go to the first drawn.

    Parameters
    ----------
    img : RasterImage
    seed : int
    region_fraction : float
        in (0, 0.5]

    Returns
    -------
    RasterImage
    """
    region_fraction = _check_fraction(region_fraction, 0.5, inclusive=True)
    rng = make_rng(seed)
    rw, rh = region_size(img.width, img.height, region_fraction)
    if (rw, rh) == (img.width, img.height):
        # The source rectangle covers the whole image
        return img
    src_x = rng.integers(img.width - rw + 1, size=N_CANDIDATES)
    src_y = rng.integers(img.height - rh + 1, size=N_CANDIDATES)
    dst_x = np.empty((N_CANDIDATES, N_CANDIDATES), dtype=np.int64)
    dst_y = np.empty((N_CANDIDATES, N_CANDIDATES), dtype=np.int64)
    for k in range(N_CANDIDATES):
        dst_x[k], dst_y[k] = _destinations(rng, img.width, img.height, rw, rh,
                                           src_x[k], src_y[k], N_CANDIDATES)

    change = _colour_change(_patch_means(img.data, src_x, src_y, rw, rh)[:, np.newaxis],
                            _patch_means(img.data, dst_x, dst_y, rw, rh))
    k, m = np.unravel_index(np.argmax(change), change.shape)
    return _paste(img, img, int(src_x[k]), int(src_y[k]),
                  int(dst_x[k, m]), int(dst_y[k, m]), rw, rh)


def splice(img, donor, seed, region_fraction=DEFAULT_REGION_FRACTION):
    """Paste a seeded random rectangle of ``donor`` into ``img``.

    The rectangle size is ``region_fraction`` of each side of ``img``.
    ``N_CANDIDATES`` donor rectangles and ``N_CANDIDATES`` destinations are
    drawn and the pair whose mean colours differ most is used.

    Parameters
    ----------
    img : RasterImage
    donor : RasterImage
    seed : int
    region_fraction : float
        in (0, 1)

    Returns
    -------
    RasterImage
    """
    region_fraction = _check_fraction(region_fraction, 1.0, inclusive=False)
    rw, rh = region_size(img.width, img.height, region_fraction)
    if donor.width < rw or donor.height < rh:
        raise DonorTooSmall('donor {}x{} is smaller than the {}x{} region'.format(
            donor.width, donor.height, rw, rh))
    rng = make_rng(seed)
    src_x = rng.integers(donor.width - rw + 1, size=N_CANDIDATES)
    src_y = rng.integers(donor.height - rh + 1, size=N_CANDIDATES)
    dst_x = rng.integers(img.width - rw + 1, size=N_CANDIDATES)
    dst_y = rng.integers(img.height - rh + 1, size=N_CANDIDATES)

    change = _colour_change(_patch_means(donor.data, src_x, src_y, rw, rh)[:, np.newaxis],
                            _patch_means(img.data, dst_x, dst_y, rw, rh)[np.newaxis, :])
    k, m = np.unravel_index(np.argmax(change), change.shape)
    return _paste(img, donor, int(src_x[k]), int(src_y[k]),
                  int(dst_x[m]), int(dst_y[m]), rw, rh)


class CopyMove(Manipulation):
    kind = 'copy_move'
    tamper = True

    def __init__(self, region_fraction=DEFAULT_REGION_FRACTION):
        super(CopyMove, self).__init__()
        self.add_par('region_fraction', _check_fraction(region_fraction, 0.5, inclusive=True))

    def apply(self, img, seed=0, donor=None):
        return copy_move(img, seed, self.region_fraction)


class Splice(Manipulation):
    kind = 'splice'
    tamper = True

    def __init__(self, region_fraction=DEFAULT_REGION_FRACTION):
        super(Splice, self).__init__()
        self.add_par('region_fraction', _check_fraction(region_fraction, 1.0, inclusive=False))

    def apply(self, img, seed=0, donor=None):
        if donor is None:
            raise ValueError('splice needs a donor image')
        return splice(img, donor, seed, self.region_fraction)
