# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
Low-level Hamming search over word-packed hashes.

A hash is packed as two uint64 words: ``hi`` holds bits 1..64 and ``lo``
holds bits 65..120 (in its low 56 bits).  The distance between two packed
hashes is ``popcount(hi1 ^ hi2) + popcount(lo1 ^ lo2)``.
"""
import numba
import numpy as np
from numba import njit, prange

__all__ = ['popcount64', 'bit_count64', 'min_distance_kernel', 'set_threads',
           'NO_MATCH']

# Larger than any distance between 120-bit hashes
NO_MATCH = 121

# Entries scanned per pass; two uint64 words each, sized to stay in L2
BLOCK = 8192

M1 = np.uint64(0x5555555555555555)
M2 = np.uint64(0x3333333333333333)
M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
H01 = np.uint64(0x0101010101010101)
S1 = np.uint64(1)
S2 = np.uint64(2)
S4 = np.uint64(4)
S56 = np.uint64(56)


@njit(cache=True)
def popcount64(x):
    x = x - ((x >> S1) & M1)
    x = (x & M2) + ((x >> S2) & M2)
    x = (x + (x >> S4)) & M4
    return (x * H01) >> S56


def bit_count64(arr):
    """Vectorised numpy popcount of a uint64 array (same SWAR steps as
    ``popcount64``)."""
    arr = np.asarray(arr, dtype=np.uint64)
    arr = arr - ((arr >> S1) & M1)
    arr = (arr & M2) + ((arr >> S2) & M2)
    arr = (arr + (arr >> S4)) & M4
    return (arr * H01) >> S56


@njit(parallel=True, cache=True)
def min_distance_kernel(q_hi, q_lo, db_hi, db_lo, out_dist, out_index):
    """Nearest database entry for every query.

    Entries are visited block by block in database order and only a
    strictly smaller distance replaces the running minimum, so ties go to
    the first entry.  ``out_dist`` / ``out_index`` (int64) are overwritten.
    """
    n_q = q_hi.shape[0]
    n_db = db_hi.shape[0]
    for i in prange(n_q):
        out_dist[i] = NO_MATCH
        out_index[i] = -1

    for b0 in range(0, n_db, BLOCK):
        b1 = min(b0 + BLOCK, n_db)
        for i in prange(n_q):
            qh = q_hi[i]
            ql = q_lo[i]
            best = out_dist[i]
            best_j = out_index[i]
            for j in range(b0, b1):
                dist = np.int64(popcount64(qh ^ db_hi[j]) + popcount64(ql ^ db_lo[j]))
                if dist < best:
                    best = dist
                    best_j = j
            out_dist[i] = best
            out_index[i] = best_j


def set_threads(threads):
    """Set the numba thread count (clipped to what numba was started with)"""
    if threads is None:
        return numba.get_num_threads()
    threads = max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(threads)
    return threads
