"""Numpy implementations of the hot inner loops.

These are the reference semantics for the compiled kernels in
``_ckernels.pyx``; both backends must produce identical outputs.
"""

import numpy as np

BACKEND = "python"


def assign_nearest(vectors, entries):
    """Index of the nearest entry (squared L2) per vector, ties to the lowest index.

    vectors: (n, d) float64, entries: (K, d) float64 -> (n,) int64.
    """
    n = vectors.shape[0]
    k = entries.shape[0]
    # accumulate one feature dimension at a time so the summation order matches
    # the sequential loop of the compiled kernel bit-for-bit
    dist2 = np.zeros((n, k))
    for j in range(vectors.shape[1]):
        diff = vectors[:, j, None] - entries[None, :, j]
        dist2 += diff * diff
    return np.argmin(dist2, axis=1).astype(np.int64)


def temporal_hold(indices, mask, prev=None):
    """Fill dropped positions of the newest frame from a masked frame window.

    indices: (N, h, w) int64, mask: (N, h, w) uint8 with 1 = dropped.
    Per dropped position of frame N-1: latest earlier frame where the position
    was received; else nearest received position of frame N-1 by Manhattan
    distance (ties to the smallest row-major position); else ``prev``; else 0.
    """
    n_win = indices.shape[0]
    newest_idx = indices[-1]
    newest_recv = mask[-1] == 0
    out = np.where(newest_recv, newest_idx, 0).astype(np.int64)
    resolved = newest_recv.copy()
    if resolved.all():
        return out

    for f in range(n_win - 2, -1, -1):
        take = ~resolved & (mask[f] == 0)
        if take.any():
            out[take] = indices[f][take]
            resolved |= take
        if resolved.all():
            return out

    miss_i, miss_j = np.nonzero(~resolved)
    recv_i, recv_j = np.nonzero(newest_recv)
    if recv_i.size > 0:
        manhattan = np.abs(miss_i[:, None] - recv_i[None, :]) + np.abs(
            miss_j[:, None] - recv_j[None, :]
        )
        # argmin returns the first minimum; nonzero order is row-major, which
        # realizes the smallest-row-major tie-break
        pick = np.argmin(manhattan, axis=1)
        out[miss_i, miss_j] = newest_idx[recv_i[pick], recv_j[pick]]
    elif prev is not None:
        out[miss_i, miss_j] = prev[miss_i, miss_j]
    return out
