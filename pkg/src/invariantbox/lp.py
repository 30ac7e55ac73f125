"""Dense linear programs over box-bounded variables: maximize ``c @ z``
subject to inequality rows ``a @ z <= b`` and ``lo <= z <= hi``.

The solver is a bounded-variable primal simplex: box bounds are handled as
nonbasic-at-bound states instead of explicit rows, so the basis never grows
beyond the inequality-row count. Bland's rule is always on; the pivot walk,
and therefore the returned vertex, is a deterministic function of the input.

Two interchangeable kernels drive the iteration: a compiled Cython extension
(``_simplex_core``) and a pure-numpy fallback (``_simplex_py``). The compiled
one is preferred at import time when present; set
``INVARIANTBOX_SIMPLEX_BACKEND=python|compiled`` to override, or pass
``backend=`` to :func:`solve`. Both kernels follow the identical pivot rules
and tolerances.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import _simplex_py
from ._simplex_py import AT_LOWER, AT_UPPER, BASIC, FREE

try:
    from . import _simplex_core
except ImportError:
    _simplex_core = None

# Pinned solver tolerances; the problems this library produces are small and
# well-scaled (|coefficients| bounded by gradient magnitudes, delta <= 0.1).
PIVOT_TOL = 1e-10
FEAS_TOL = 1e-8
OPT_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def available_backends():
    """Kernel names usable on this install, preferred first."""
    if _simplex_core is not None:
        return ("compiled", "python")
    return ("python",)


def default_backend():
    forced = os.environ.get("INVARIANTBOX_SIMPLEX_BACKEND")
    if forced:
        if forced not in ("compiled", "python"):
            raise ValueError(
                f"INVARIANTBOX_SIMPLEX_BACKEND={forced!r}; use 'compiled' or 'python'")
        if forced == "compiled" and _simplex_core is None:
            raise RuntimeError("compiled simplex kernel requested but not built")
        return forced
    return available_backends()[0]


def _kernel(backend):
    if backend is None:
        backend = default_backend()
    if backend == "python":
        return _simplex_py.simplex_loop
    if backend == "compiled":
        if _simplex_core is None:
            raise RuntimeError("compiled simplex kernel is not available")
        return _simplex_core.simplex_loop
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class LinearProgram:
    """Maximize ``objective @ z`` s.t. ``row_coeffs @ z <= row_rhs`` and
    ``var_lower <= z <= var_upper`` (bounds may be infinite)."""

    objective: np.ndarray
    var_lower: np.ndarray
    var_upper: np.ndarray
    row_coeffs: np.ndarray
    row_rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=np.float64)
        lo = np.asarray(self.var_lower, dtype=np.float64)
        hi = np.asarray(self.var_upper, dtype=np.float64)
        n = c.size
        if c.ndim != 1 or n == 0:
            raise ValueError("objective must be a nonempty vector")
        if lo.shape != (n,) or hi.shape != (n,):
            raise ValueError("bound vectors must match the variable count")
        rows = np.asarray(self.row_coeffs, dtype=np.float64)
        if rows.size == 0:
            rows = rows.reshape(0, n)
        rhs = np.asarray(self.row_rhs, dtype=np.float64).reshape(-1)
        if rows.ndim != 2 or rows.shape[1] != n:
            raise ValueError("row coefficient vectors must match the variable count")
        if rhs.shape != (rows.shape[0],):
            raise ValueError("row_rhs length must match the row count")
        if not np.all(np.isfinite(c)):
            raise ValueError("objective coefficients must be finite")
        if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(rhs))):
            raise ValueError("row coefficients and right-hand sides must be finite")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("bounds may be infinite but not NaN")
        if np.any(lo > hi):
            raise ValueError("var_lower must not exceed var_upper")
        for name, arr in (("objective", c), ("var_lower", lo), ("var_upper", hi),
                          ("row_coeffs", rows), ("row_rhs", rhs)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_rows(cls, objective, var_lower, var_upper, rows):
        """Build from an iterable of ``(coefficients, rhs)`` pairs."""
        objective = np.asarray(objective, dtype=np.float64)
        rows = list(rows)
        coeffs = np.array([np.asarray(a, dtype=np.float64) for a, _ in rows],
                          dtype=np.float64).reshape(len(rows), objective.size)
        rhs = np.array([float(b) for _, b in rows], dtype=np.float64)
        return cls(objective, var_lower, var_upper, coeffs, rhs)

    @property
    def num_vars(self):
        return self.objective.size

    @property
    def num_rows(self):
        return self.row_rhs.size

    def rows(self):
        """Iterate ``(coefficients, rhs)`` pairs."""
        return zip(self.row_coeffs, self.row_rhs)


@dataclass(frozen=True)
class LPSolution:
    status: str
    values: np.ndarray | None = None
    objective_value: float | None = None
    iterations: int = 0
    backend: str = field(default="", compare=False)


def _initial_status(lo, hi):
    """Nonbasic state per variable: prefer the finite lower bound."""
    n = lo.size
    vstat = np.empty(n, dtype=np.int8)
    for i in range(n):
        if np.isfinite(lo[i]):
            vstat[i] = AT_LOWER
        elif np.isfinite(hi[i]):
            vstat[i] = AT_UPPER
        else:
            vstat[i] = FREE
    return vstat


def _nonbasic_values(lo, hi, vstat):
    x = np.where(vstat == AT_UPPER, hi, np.where(vstat == AT_LOWER, lo, 0.0))
    return np.where(vstat == BASIC, 0.0, x)


def _polish_basic(A, rhs, lo, hi, basis, vstat):
    """Recompute the full point, solving for basic values from scratch.

    The kernel maintains basic values incrementally through eta updates; one
    direct solve at the end removes the accumulated drift.
    """
    x = _nonbasic_values(lo, hi, vstat)
    if basis.size:
        resid = rhs - A @ x
        B = A[:, basis]
        try:
            x[basis] = np.linalg.solve(B, resid)
        except np.linalg.LinAlgError:  # fall back to the iterated values
            return None
    return x


def solve(lp, backend=None):
    """Solve to an optimal basic solution (or detect infeasible/unbounded)."""
    kernel = _kernel(backend)
    backend_name = backend or default_backend()
    n = lp.num_vars
    m = lp.num_rows

    # standard form: [rows | I] (z, slacks) = rhs, slacks in [0, inf)
    A = np.hstack([lp.row_coeffs, np.eye(m)]) if m else lp.row_coeffs.copy()
    lo = np.concatenate([lp.var_lower, np.zeros(m)])
    hi = np.concatenate([lp.var_upper, np.full(m, np.inf)])
    vstat = _initial_status(lo, hi)
    vstat[n:] = BASIC
    basis = np.arange(n, n + m, dtype=np.int64)

    x0 = _nonbasic_values(lo, hi, vstat)
    xb = lp.row_rhs - lp.row_coeffs @ x0[:n] if m else np.zeros(0)

    bad = np.nonzero(xb < 0.0)[0]
    iterations = 0
    if bad.size:
        # phase 1: artificial column -e_i per violated row, minimize their sum
        n_art = bad.size
        art_cols = np.zeros((m, n_art))
        for k, i in enumerate(bad):
            art_cols[i, k] = -1.0
        A = np.hstack([A, art_cols])
        lo = np.concatenate([lo, np.zeros(n_art)])
        hi = np.concatenate([hi, np.full(n_art, np.inf)])
        vstat = np.concatenate([vstat, np.full(n_art, BASIC, dtype=np.int8)])
        art_idx = np.arange(n + m, n + m + n_art, dtype=np.int64)
        for k, i in enumerate(bad):
            vstat[basis[i]] = AT_LOWER  # slack leaves at its lower bound 0
            basis[i] = art_idx[k]
        binv = np.eye(m)
        binv[bad, bad] = -1.0
        xb = xb.copy()
        xb[bad] = -xb[bad]

        c1 = np.zeros(A.shape[1])
        c1[art_idx] = -1.0
        A = np.ascontiguousarray(A)
        code, it1 = kernel(A, c1, lo, hi, basis, vstat, binv, xb,
                           PIVOT_TOL, OPT_TOL, _iteration_cap(A.shape))
        iterations += it1
        if code != _simplex_py.OPTIMAL:
            # phase-1 objective is bounded above by 0, so only the iteration
            # cap can trip here
            raise RuntimeError("simplex phase 1 did not terminate")
        art_set = set(art_idx.tolist())
        infeas = sum(xb[i] for i in range(m) if int(basis[i]) in art_set)
        if infeas > FEAS_TOL:
            return LPSolution(status=INFEASIBLE, iterations=iterations,
                              backend=backend_name)
        # pin artificials at zero for phase 2; fixed variables never re-enter
        lo[art_idx] = 0.0
        hi[art_idx] = 0.0
        c2 = np.concatenate([lp.objective, np.zeros(m + n_art)])
    else:
        binv = np.eye(m)
        A = np.ascontiguousarray(A)
        c2 = np.concatenate([lp.objective, np.zeros(m)])

    code, it2 = kernel(A, c2, lo, hi, basis, vstat, binv, xb,
                       PIVOT_TOL, OPT_TOL, _iteration_cap(A.shape))
    iterations += it2
    if code == _simplex_py.UNBOUNDED:
        return LPSolution(status=UNBOUNDED, iterations=iterations,
                          backend=backend_name)
    if code == _simplex_py.ITERATION_LIMIT:
        raise RuntimeError("simplex iteration limit reached")

    x = _polish_basic(A, lp.row_rhs if m else np.zeros(0), lo, hi, basis, vstat)
    if x is None:
        x = _nonbasic_values(lo, hi, vstat)
        x[basis] = xb
    values = x[:n].copy()
    return LPSolution(status=OPTIMAL, values=values,
                      objective_value=float(lp.objective @ values),
                      iterations=iterations, backend=backend_name)


def _iteration_cap(shape):
    m, n = shape
    return 10_000 + 200 * (m + n)


def check_feasibility(lp, values, bound_tol=1e-9, row_tol=FEAS_TOL):
    """Max bound / row violations of a candidate point (diagnostic helper)."""
    v = np.asarray(values, dtype=np.float64)
    bound_viol = float(np.max(np.maximum(lp.var_lower - v, v - lp.var_upper),
                              initial=0.0))
    row_viol = float(np.max(lp.row_coeffs @ v - lp.row_rhs, initial=0.0)) \
        if lp.num_rows else 0.0
    return bound_viol, row_viol
