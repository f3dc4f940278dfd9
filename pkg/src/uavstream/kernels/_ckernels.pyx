# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: nearest-codeword assignment and temporal-hold fill.

Semantics match ``_pykernels`` exactly (same accumulation order, same
tie-breaks); equivalence is enforced by the test suite.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "c"


def assign_nearest(double[:, ::1] vectors, double[:, ::1] entries):
    """Index of the nearest entry (squared L2) per vector, ties to the lowest index."""
    cdef Py_ssize_t n = vectors.shape[0]
    cdef Py_ssize_t d = vectors.shape[1]
    cdef Py_ssize_t k_total = entries.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] idx = out
    cdef Py_ssize_t i, k, j, best_k
    cdef double best, dist, diff
    for i in range(n):
        best_k = 0
        best = 0.0
        for j in range(d):
            diff = vectors[i, j] - entries[0, j]
            best += diff * diff
        for k in range(1, k_total):
            dist = 0.0
            for j in range(d):
                diff = vectors[i, j] - entries[k, j]
                dist += diff * diff
            if dist < best:
                best = dist
                best_k = k
        idx[i] = best_k
    return out


def temporal_hold(cnp.int64_t[:, :, ::1] indices, cnp.uint8_t[:, :, ::1] mask, prev=None):
    """Fill dropped positions of the newest frame from a masked frame window."""
    cdef Py_ssize_t n_win = indices.shape[0]
    cdef Py_ssize_t h = indices.shape[1]
    cdef Py_ssize_t w = indices.shape[2]
    cdef Py_ssize_t newest = n_win - 1
    out = np.zeros((h, w), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] res = out
    cdef cnp.int64_t[:, ::1] prev_view
    cdef bint has_prev = prev is not None
    if has_prev:
        prev_view = prev

    cdef Py_ssize_t i, j, f, r, n_recv, n_miss, best_r
    cdef long long best_d, dist
    # received positions of the newest frame, row-major order
    recv_pos = np.empty(h * w, dtype=np.int64)
    miss_pos = np.empty(h * w, dtype=np.int64)
    cdef cnp.int64_t[::1] recv = recv_pos
    cdef cnp.int64_t[::1] miss = miss_pos
    n_recv = 0
    n_miss = 0
    for i in range(h):
        for j in range(w):
            if mask[newest, i, j] == 0:
                res[i, j] = indices[newest, i, j]
                recv[n_recv] = i * w + j
                n_recv += 1
            else:
                resolved = False
                for f in range(n_win - 2, -1, -1):
                    if mask[f, i, j] == 0:
                        res[i, j] = indices[f, i, j]
                        resolved = True
                        break
                if not resolved:
                    miss[n_miss] = i * w + j
                    n_miss += 1

    if n_miss == 0:
        return out
    if n_recv > 0:
        for r in range(n_miss):
            i = miss[r] // w
            j = miss[r] % w
            best_r = 0
            best_d = llabs(recv[0] // w - i) + llabs(recv[0] % w - j)
            for f in range(1, n_recv):
                dist = llabs(recv[f] // w - i) + llabs(recv[f] % w - j)
                if dist < best_d:
                    best_d = dist
                    best_r = f
            res[i, j] = indices[newest, recv[best_r] // w, recv[best_r] % w]
    elif has_prev:
        for r in range(n_miss):
            i = miss[r] // w
            j = miss[r] % w
            res[i, j] = prev_view[i, j]
    return out


cdef inline long long llabs(long long x):
    return -x if x < 0 else x
