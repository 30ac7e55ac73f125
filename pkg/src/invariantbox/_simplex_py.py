"""Pure-numpy bounded-variable simplex kernel.

Contract shared with the compiled twin in ``_simplex_core``: run the primal
simplex iteration (maximize ``c @ x`` over ``A x = rhs`` with box bounds)
starting from the basis described by ``basis`` / ``vstat`` / ``binv`` / ``xb``,
mutating those arrays in place. Entering variables follow Bland's rule
(smallest eligible index); the leaving variable is the blocking variable of
smallest index, which makes the pivot sequence deterministic and cycle-free.
"""

from __future__ import annotations

import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
FREE = 3


def simplex_loop(A, c, lower, upper, basis, vstat, binv, xb,
                 tol_pivot, tol_opt, max_iter):
    """Iterate to optimality. Returns ``(status_code, iterations)``."""
    m, n = A.shape
    fixed = lower == upper
    for it in range(max_iter):
        if m:
            y = c[basis] @ binv
            d = c - y @ A
        else:
            d = c
        down = vstat == AT_LOWER
        up = vstat == AT_UPPER
        free = vstat == FREE
        eligible = (~fixed) & (((down | free) & (d > tol_opt))
                               | ((up | free) & (d < -tol_opt)))
        candidates = np.nonzero(eligible)[0]
        if candidates.size == 0:
            return OPTIMAL, it
        j = int(candidates[0])
        sigma = 1.0 if d[j] > 0.0 else -1.0

        t_bound = upper[j] - lower[j] if vstat[j] != FREE else np.inf
        if m:
            w = binv @ A[:, j]
            delta = sigma * w
            lim = np.full(m, np.inf)
            lo_b = lower[basis]
            up_b = upper[basis]
            dec = delta > tol_pivot
            inc = delta < -tol_pivot
            # basic values move as xb - t*delta; clamp degenerate negatives to 0
            lim[dec] = (xb[dec] - lo_b[dec]) / delta[dec]
            lim[inc] = (xb[inc] - up_b[inc]) / delta[inc]
            np.maximum(lim, 0.0, out=lim)
            rows_min = lim.min() if m else np.inf
        else:
            w = delta = lim = None
            rows_min = np.inf

        t_star = min(t_bound, rows_min)
        if not np.isfinite(t_star):
            return UNBOUNDED, it
        tie = t_star + 1e-10 * (1.0 + abs(t_star))

        best_var = j if t_bound <= tie else n + m
        best_row = -1
        if m:
            for r in np.nonzero(lim <= tie)[0]:
                if basis[r] < best_var:
                    best_var = basis[r]
                    best_row = int(r)

        if best_row < 0:
            # bound flip: entering variable crosses to its opposite bound
            if m:
                xb -= t_star * delta
            vstat[j] = AT_UPPER if vstat[j] == AT_LOWER else AT_LOWER
            continue

        r = best_row
        if vstat[j] == AT_LOWER:
            enter_val = lower[j] + sigma * t_star
        elif vstat[j] == AT_UPPER:
            enter_val = upper[j] + sigma * t_star
        else:
            enter_val = sigma * t_star
        leaving = basis[r]
        vstat[leaving] = AT_LOWER if delta[r] > 0.0 else AT_UPPER
        xb -= t_star * delta
        xb[r] = enter_val
        basis[r] = j
        vstat[j] = BASIC

        piv = w[r]
        binv[r, :] /= piv
        scale = w.copy()
        scale[r] = 0.0
        binv -= np.outer(scale, binv[r, :])

    return ITERATION_LIMIT, max_iter
