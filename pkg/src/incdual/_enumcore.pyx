# cython: language_level=3
"""Compiled exhaustive enumeration over grid choices for the semilinear
primal problem.

States are updated incrementally: advancing the combo odometer touches the
trailing digits most of the time, so only the affected tail of the
trajectory is recomputed.  Orders combos row-major over
(i0, i1, j_0, ..., j_{N-2}), last control fastest, matching the numpy
fallback index-for-index.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

# terminal-cost kinds
DEF KIND_AFFINE = 0
DEF KIND_QUADRATIC = 1
DEF KIND_NORM1 = 2
DEF KIND_HALFSQ = 3


cdef inline double _phi_eval(int kind, double[::1] z, int m,
                             double[::1] c, double[:, ::1] P, double b) nogil:
    cdef double s = 0.0
    cdef double acc
    cdef int i, j
    if kind == KIND_AFFINE:
        s = b
        for i in range(m):
            s += c[i] * z[i]
        return s
    if kind == KIND_QUADRATIC:
        s = b
        for i in range(m):
            s += c[i] * z[i]
            acc = 0.0
            for j in range(m):
                acc += P[i, j] * z[j]
            s += 0.5 * z[i] * acc
        return s
    if kind == KIND_NORM1:
        for i in range(m):
            s += z[i] if z[i] >= 0.0 else -z[i]
        return s
    # KIND_HALFSQ
    for i in range(m):
        s += 0.5 * z[i] * z[i]
    return s


def enumerate_semilinear(double[:, ::1] G0, double[:, ::1] G1, double[:, ::1] GU,
                         double[:, ::1] A0, double[:, ::1] A1, double[:, ::1] B,
                         int N, int phi_kind, double[::1] phi_c,
                         double[:, ::1] phi_P, double phi_b):
    """Best terminal value and flat combo index; mirrors the numpy fallback."""
    cdef Py_ssize_t g0 = G0.shape[0], g1 = G1.shape[0], gu = GU.shape[0]
    cdef int n = G0.shape[1]
    cdef int r = GU.shape[1]
    cdef int m = 2 * n
    cdef long long total = g0 * g1
    cdef int t, s, i, j, pos, lim
    for t in range(N - 1):
        total *= gu

    digits_arr = np.zeros(N + 1, dtype=np.int64)
    cdef long long[::1] digits = digits_arr
    states_arr = np.zeros((N + 1, n), dtype=np.float64)
    cdef double[:, ::1] X = states_arr
    z_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] z = z_arr

    # initial states for the all-zeros combo
    for i in range(n):
        X[0, i] = G0[0, i]
        X[1, i] = G1[0, i]
    for s in range(2, N + 1):
        for i in range(n):
            X[s, i] = 0.0
            for j in range(n):
                X[s, i] += A0[i, j] * X[s - 2, j] + A1[i, j] * X[s - 1, j]
            for j in range(r):
                X[s, i] += B[i, j] * GU[digits[s], j]

    cdef double best = np.inf
    cdef long long best_idx = -1
    cdef long long flat = 0
    cdef double val

    with nogil:
        while True:
            for i in range(n):
                z[i] = X[N - 1, i]
                z[n + i] = X[N, i]
            val = _phi_eval(phi_kind, z, m, phi_c, phi_P, phi_b)
            if val < best:
                best = val
                best_idx = flat
            flat += 1
            if flat >= total:
                break
            # advance the odometer; pos is the highest digit that changed
            pos = N
            while pos >= 0:
                digits[pos] += 1
                lim = <int>g0 if pos == 0 else (<int>g1 if pos == 1 else <int>gu)
                if digits[pos] < lim:
                    break
                digits[pos] = 0
                pos -= 1
            if pos == 0:
                # digit 1 wrapped to zero alongside, so refresh both states
                for i in range(n):
                    X[0, i] = G0[digits[0], i]
                    X[1, i] = G1[digits[1], i]
            elif pos == 1:
                for i in range(n):
                    X[1, i] = G1[digits[1], i]
            # recompute the affected tail of the trajectory
            s = 2 if pos < 2 else pos
            while s <= N:
                for i in range(n):
                    X[s, i] = 0.0
                    for j in range(n):
                        X[s, i] += A0[i, j] * X[s - 2, j] + A1[i, j] * X[s - 1, j]
                    for j in range(r):
                        X[s, i] += B[i, j] * GU[digits[s], j]
                s += 1

    return best, int(best_idx)
