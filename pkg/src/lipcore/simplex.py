"""Dense two-phase simplex solver for small linear programs.

Solves

    minimize    c . x
    subject to  A_ub x <= b_ub
                A_eq x == b_eq
                x >= 0

All variables are nonnegative; the callers in this package formulate their
programs so that this is enough (convex-combination weights, seminorm bounds
and epigraph slacks are all naturally >= 0).

The solver is a plain dense tableau.  Entering column: most negative reduced
cost, ties broken by lowest column index.  When the objective stalls on a run
of degenerate pivots the solver switches to Bland's rule (lowest eligible
column index) until it makes progress again, which prevents cycling.  The
leaving row always breaks ratio-test ties by the lowest basic-variable index.
All choices are deterministic, so identical inputs produce identical pivots
and bit-identical solutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Pivot/zero tolerances.  The programs built in this package are small and
# well scaled (coordinates and distances of order one), so fixed absolute
# tolerances are adequate.
_TOL_COST = 1e-9      # reduced cost considered negative below -_TOL_COST
_TOL_PIVOT = 1e-10    # smallest usable pivot element
_TOL_FEAS = 1e-8      # phase-1 objective above this means infeasible
_STALL_LIMIT = 64     # degenerate pivots before switching to Bland's rule

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    fun: float | None
    iterations: int

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
             max_iter: int | None = None) -> LPResult:
    """Solve min c.x subject to A_ub x <= b_ub, A_eq x == b_eq, x >= 0."""
    c = np.asarray(c, dtype=float)
    n = c.size
    rows = []
    rhs = []
    n_ub = 0
    if A_ub is not None:
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        b_ub = np.atleast_1d(np.asarray(b_ub, dtype=float))
        if A_ub.shape != (b_ub.size, n):
            raise ValueError("inconsistent A_ub/b_ub shapes")
        n_ub = b_ub.size
        rows.append(A_ub)
        rhs.append(b_ub)
    if A_eq is not None:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        b_eq = np.atleast_1d(np.asarray(b_eq, dtype=float))
        if A_eq.shape != (b_eq.size, n):
            raise ValueError("inconsistent A_eq/b_eq shapes")
        rows.append(A_eq)
        rhs.append(b_eq)

    if not rows:
        # Unconstrained nonnegative minimization: 0 unless some cost is
        # negative, in which case the problem is unbounded.
        if np.any(c < -_TOL_COST):
            return LPResult(UNBOUNDED, None, None, 0)
        return LPResult(OPTIMAL, np.zeros(n), 0.0, 0)

    A = np.vstack(rows)
    b = np.concatenate(rhs)
    m = b.size

    # Slack variables for the inequality rows.
    total = n + n_ub
    full = np.zeros((m, total))
    full[:, :n] = A
    for i in range(n_ub):
        full[i, n + i] = 1.0

    # Make every right-hand side nonnegative (all rows are equalities now).
    neg = b < 0
    full[neg] *= -1.0
    b = np.abs(b)

    # Initial basis: slack columns that survived un-negated, artificials
    # elsewhere.
    basis = np.empty(m, dtype=int)
    art_rows = []
    for i in range(m):
        if i < n_ub and not neg[i]:
            basis[i] = n + i
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    if n_art:
        art = np.zeros((m, n_art))
        for k, i in enumerate(art_rows):
            art[i, k] = 1.0
            basis[i] = total + k
        full = np.hstack([full, art])

    ncols = full.shape[1]
    # Tableau: constraint rows then objective row; last column is the RHS.
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :ncols] = full
    T[:m, -1] = b

    if max_iter is None:
        max_iter = 10_000 + 20 * (m + ncols)
    iters = 0

    if n_art:
        # Phase 1: minimize the sum of artificials.  Pricing the initial
        # basis out turns the objective row into minus the sum of the
        # artificial rows, with zero reduced cost on the artificials.
        T[-1, :] = -T[art_rows, :].sum(axis=0)
        T[-1, total:ncols] = 0.0
        allowed = np.ones(ncols, dtype=bool)
        allowed[total:] = False  # artificials may leave but never re-enter
        status, iters = _iterate(T, basis, allowed, max_iter, iters)
        if status != OPTIMAL:
            return LPResult(status, None, None, iters)
        if -T[-1, -1] > _TOL_FEAS:
            return LPResult(INFEASIBLE, None, None, iters)
        T, basis = _remove_artificials(T, basis, total)
        ncols = total

    # Phase 2: original objective, priced out against the current basis.
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i in range(T.shape[0] - 1):
        cb = T[-1, basis[i]]
        if cb != 0.0:
            T[-1, :] -= cb * T[i, :]

    allowed = np.ones(ncols, dtype=bool)
    status, iters = _iterate(T, basis, allowed, max_iter, iters)
    if status != OPTIMAL:
        return LPResult(status, None, None, iters)

    x = np.zeros(ncols)
    for i in range(T.shape[0] - 1):
        x[basis[i]] = T[i, -1]
    x = x[:n]
    return LPResult(OPTIMAL, x, float(c @ x), iters)


def _iterate(T, basis, allowed, max_iter, iters):
    m = T.shape[0] - 1
    ncols = allowed.size
    bland = False
    stall = 0
    last_obj = -T[-1, -1]
    inf_costs = np.full(ncols, np.inf)
    while True:
        if iters >= max_iter:
            return ITERATION_LIMIT, iters
        costs = np.where(allowed, T[-1, :ncols], inf_costs)
        if bland:
            eligible = np.nonzero(costs < -_TOL_COST)[0]
            if eligible.size == 0:
                return OPTIMAL, iters
            j = int(eligible[0])
        else:
            j = int(np.argmin(costs))
            if costs[j] >= -_TOL_COST:
                return OPTIMAL, iters

        col = T[:m, j]
        usable = col > _TOL_PIVOT
        if not usable.any():
            return UNBOUNDED, iters
        ratios = np.where(usable, T[:m, -1] / np.where(usable, col, 1.0),
                          np.inf)
        rmin = ratios.min()
        tied = np.nonzero(ratios <= rmin + _TOL_PIVOT)[0]
        r = int(tied[np.argmin(basis[tied])])

        _pivot(T, basis, r, j)
        iters += 1

        obj = -T[-1, -1]
        if obj < last_obj - 1e-12:
            last_obj = obj
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True


def _pivot(T, basis, r, j):
    T[r, :] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r, :])
    T[:, j] = 0.0
    T[r, j] = 1.0
    basis[r] = j


def _remove_artificials(T, basis, total):
    """Pivot leftover artificial variables out of the basis, drop rows that
    turn out redundant, and delete the artificial columns."""
    m = T.shape[0] - 1
    drop_rows = []
    for i in range(m):
        if basis[i] >= total:
            structural = np.abs(T[i, :total]) > _TOL_PIVOT
            if structural.any():
                _pivot(T, basis, i, int(np.argmax(structural)))
            else:
                drop_rows.append(i)
    if drop_rows:
        keep = [i for i in range(m) if i not in drop_rows] + [m]
        T = T[keep, :]
        basis = np.delete(basis, drop_rows)
    # Artificial columns are the trailing block before the RHS.
    T = np.hstack([T[:, :total], T[:, -1:]])
    return T, basis
