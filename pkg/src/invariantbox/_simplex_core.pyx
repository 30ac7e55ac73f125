# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bounded-variable simplex kernel.

Same contract as the pure-numpy twin in ``_simplex_py``: mutate
``basis`` / ``vstat`` / ``binv`` / ``xb`` in place and report how the
iteration ended. Pivot selection is Bland's rule on both sides, so the
walk is deterministic.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

cdef enum:
    STAT_LOWER = 0
    STAT_UPPER = 1
    STAT_BASIC = 2
    STAT_FREE = 3


def simplex_loop(double[:, ::1] A, double[::1] c,
                 double[::1] lower, double[::1] upper,
                 long long[::1] basis, signed char[::1] vstat,
                 double[:, ::1] binv, double[::1] xb,
                 double tol_pivot, double tol_opt, long long max_iter):
    """Iterate to optimality. Returns ``(status_code, iterations)``."""
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_arr = np.zeros(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_arr = np.zeros(m)
    cdef double[::1] y = y_arr
    cdef double[::1] w = w_arr
    cdef double inf = np.inf
    cdef Py_ssize_t it, i, k, r, j, bj, leaving, best_row
    cdef long long best_var
    cdef double dj, sigma, t_bound, t_star, tie, delta_i, lim, enter_val, piv, s
    cdef int stat_j

    for it in range(max_iter):
        # y = c_B @ binv
        for i in range(m):
            s = 0.0
            for k in range(m):
                s += c[basis[k]] * binv[k, i]
            y[i] = s

        # entering: smallest-index eligible nonbasic column (Bland)
        j = -1
        sigma = 0.0
        for bj in range(n):
            if vstat[bj] == STAT_BASIC or lower[bj] == upper[bj]:
                continue
            dj = c[bj]
            for i in range(m):
                dj -= y[i] * A[i, bj]
            if vstat[bj] == STAT_LOWER:
                if dj > tol_opt:
                    j = bj
                    sigma = 1.0
                    break
            elif vstat[bj] == STAT_UPPER:
                if dj < -tol_opt:
                    j = bj
                    sigma = -1.0
                    break
            else:  # free at zero
                if dj > tol_opt:
                    j = bj
                    sigma = 1.0
                    break
                if dj < -tol_opt:
                    j = bj
                    sigma = -1.0
                    break
        if j < 0:
            return OPTIMAL, it

        stat_j = vstat[j]
        t_bound = upper[j] - lower[j] if stat_j != STAT_FREE else inf

        # w = binv @ A[:, j]; ratio test against basic-variable bounds
        t_star = t_bound
        for i in range(m):
            s = 0.0
            for k in range(m):
                s += binv[i, k] * A[k, j]
            w[i] = s
            delta_i = sigma * s
            if delta_i > tol_pivot:
                lim = (xb[i] - lower[basis[i]]) / delta_i
            elif delta_i < -tol_pivot:
                lim = (xb[i] - upper[basis[i]]) / delta_i
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim < t_star:
                t_star = lim

        if t_star == inf:
            return UNBOUNDED, it
        tie = t_star + 1e-10 * (1.0 + (t_star if t_star >= 0.0 else -t_star))

        best_var = j if t_bound <= tie else <long long>(n + m)
        best_row = -1
        for i in range(m):
            delta_i = sigma * w[i]
            if delta_i > tol_pivot:
                lim = (xb[i] - lower[basis[i]]) / delta_i
            elif delta_i < -tol_pivot:
                lim = (xb[i] - upper[basis[i]]) / delta_i
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim <= tie and basis[i] < best_var:
                best_var = basis[i]
                best_row = i

        if best_row < 0:
            # bound flip
            for i in range(m):
                xb[i] -= t_star * sigma * w[i]
            vstat[j] = STAT_UPPER if stat_j == STAT_LOWER else STAT_LOWER
            continue

        r = best_row
        if stat_j == STAT_LOWER:
            enter_val = lower[j] + sigma * t_star
        elif stat_j == STAT_UPPER:
            enter_val = upper[j] + sigma * t_star
        else:
            enter_val = sigma * t_star
        leaving = basis[r]
        vstat[leaving] = STAT_LOWER if sigma * w[r] > 0.0 else STAT_UPPER
        for i in range(m):
            xb[i] -= t_star * sigma * w[i]
        xb[r] = enter_val
        basis[r] = j
        vstat[j] = STAT_BASIC

        piv = w[r]
        for k in range(m):
            binv[r, k] /= piv
        for i in range(m):
            if i == r:
                continue
            s = w[i]
            if s != 0.0:
                for k in range(m):
                    binv[i, k] -= s * binv[r, k]

    return ITERATION_LIMIT, max_iter
