"""Numpy fallback for exhaustive primal enumeration.

Walks the same flat index space as the compiled kernel, in the same
row-major order over (i0, i1, j_0, ..., j_{N-2}) with the last control
fastest, so both backends report identical best values and indices.
"""

from __future__ import annotations

import numpy as np

from .convex_kernel import ConvexFn, eval_batch

CHUNK = 1 << 16


def enumerate_semilinear(
    G0: np.ndarray,
    G1: np.ndarray,
    GU: np.ndarray,
    A0: np.ndarray,
    A1: np.ndarray,
    B: np.ndarray,
    N: int,
    phi: ConvexFn,
) -> tuple[float, int]:
    """Best terminal value and its flat combo index over all grid choices."""
    g0, g1, gu = G0.shape[0], G1.shape[0], GU.shape[0]
    dims = (g0, g1) + (gu,) * (N - 1)
    total = g0 * g1 * gu ** (N - 1)
    best = np.inf
    best_idx = -1
    A0T, A1T, BT = A0.T, A1.T, B.T
    for start in range(0, total, CHUNK):
        stop = min(start + CHUNK, total)
        flat = np.arange(start, stop)
        parts = np.unravel_index(flat, dims)
        xprev = G0[parts[0]]
        xcur = G1[parts[1]]
        for t in range(N - 1):
            xnext = xprev @ A0T + xcur @ A1T + GU[parts[t + 2]] @ BT
            xprev, xcur = xcur, xnext
        vals = eval_batch(phi, np.hstack([xprev, xcur]))
        k = int(np.argmin(vals))
        if vals[k] < best:
            best = float(vals[k])
            best_idx = start + k
    return best, best_idx
