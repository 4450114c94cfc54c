"""Deterministic dense simplex for the small LPs of the sparse-recovery path.

Problems have the shape  min c.x  s.t.  A x <= b, x >= 0  with a few dozen
rows and a few hundred columns, so everything runs on a dense tableau.
Three routes share one pivot kernel:

  * b >= 0            -> primal simplex from the slack basis
  * min(c) > 0        -> dual simplex from the slack basis (the slack basis
                         is dual feasible); falls back to two-phase primal
                         if it stalls
  * otherwise         -> two-phase primal with artificial variables

Pivots are fully deterministic (lowest-index tie-breaking everywhere) and
the primal ratio test is lexicographic, which prevents cycling on
degenerate vertices.  Determinism matters: lookup-table builds must be
bit-reproducible across runs and machines of the same architecture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


class LpError(ValueError):
    """Malformed linear program."""


@dataclass(frozen=True)
class LinearProgram:
    """min objective.x  subject to  inequality_matrix x <= inequality_rhs, x >= 0."""

    objective: np.ndarray
    inequality_matrix: np.ndarray
    inequality_rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        A = np.asarray(self.inequality_matrix, dtype=float)
        b = np.asarray(self.inequality_rhs, dtype=float)
        if A.ndim != 2 or c.ndim != 1 or b.ndim != 1:
            raise LpError("objective and rhs must be vectors, matrix 2-D")
        if A.shape != (b.size, c.size):
            raise LpError(f"inconsistent shapes: A {A.shape}, b {b.size}, c {c.size}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A))
                and np.all(np.isfinite(b))):
            raise LpError("LP data must be finite")
        for name, arr in (("objective", c), ("inequality_matrix", A),
                          ("inequality_rhs", b)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.objective.size

    @property
    def r(self) -> int:
        return self.inequality_rhs.size


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray | None
    objective_value: float | None
    status: str
    iterations: int


def _pivot(T: np.ndarray, i: int, j: int) -> None:
    T[i] = T[i] / T[i, j]
    col = T[:, j].copy()
    col[i] = 0.0
    T -= np.outer(col, T[i])
    T[:, j] = 0.0
    T[i, j] = 1.0


def _lex_ratio_row(T: np.ndarray, r: int, j: int, tol: float) -> int | None:
    """Leaving row for entering column j: lexicographic min-ratio over rows
    with positive pivot entries.  Returns None when the column is unbounded."""
    col = T[:r, j]
    mask = col > tol
    if not mask.any():
        return None
    rows = np.nonzero(mask)[0]
    cv = col[rows]
    ratios = T[rows, -1] / cv
    best = ratios.min()
    keep = ratios <= best + 1e-9 * (1.0 + abs(best))
    rows, cv = rows[keep], cv[keep]
    q = 0
    ncols = T.shape[1] - 1
    while rows.size > 1 and q < ncols:
        rq = T[rows, q] / cv
        bq = rq.min()
        keep = rq <= bq + 1e-9 * (1.0 + abs(bq))
        rows, cv = rows[keep], cv[keep]
        q += 1
    return int(rows[0])


def _primal(T: np.ndarray, basis: np.ndarray, r: int, ncols: int,
            tol: float, max_iter: int, start_iter: int = 0) -> tuple[str, int]:
    """Phase-2 primal simplex on a feasible tableau; cost row is T[r]."""
    it = start_iter
    while it < max_iter:
        costs = T[r, :ncols]
        j = int(np.argmin(costs))
        if costs[j] >= -tol:
            return OPTIMAL, it
        i = _lex_ratio_row(T, r, j, tol)
        if i is None:
            return UNBOUNDED, it
        _pivot(T, i, j)
        basis[i] = j
        it += 1
    return ITERATION_LIMIT, it


def _dual(T: np.ndarray, basis: np.ndarray, r: int, ncols: int,
          tol: float, max_iter: int) -> tuple[str, int]:
    """Dual simplex: restores primal feasibility while keeping costs >= 0."""
    it = 0
    while it < max_iter:
        rhs = T[:r, -1]
        i = int(np.argmin(rhs))
        if rhs[i] >= -tol:
            return OPTIMAL, it
        row = T[i, :ncols]
        mask = row < -tol
        if not mask.any():
            return INFEASIBLE, it
        ratios = np.where(mask, T[r, :ncols] / np.where(mask, -row, 1.0), np.inf)
        j = int(np.argmin(ratios))
        _pivot(T, i, j)
        basis[i] = j
        it += 1
    return ITERATION_LIMIT, it


def _slack_tableau(lp: LinearProgram) -> tuple[np.ndarray, np.ndarray, int]:
    r, n = lp.r, lp.n
    N = n + r
    T = np.zeros((r + 1, N + 1))
    T[:r, :n] = lp.inequality_matrix
    T[:r, n:N] = np.eye(r)
    T[:r, -1] = lp.inequality_rhs
    T[r, :n] = lp.objective
    return T, np.arange(n, N), N


def _extract(T: np.ndarray, basis: np.ndarray, lp: LinearProgram,
             status: str, iters: int) -> LpSolution:
    if status != OPTIMAL:
        return LpSolution(None, None, status, iters)
    r, n = lp.r, lp.n
    full = np.zeros(n + r)
    ok = basis < n + r  # zero-level artificials on redundant rows carry no value
    full[basis[ok]] = T[:r, -1][ok]
    x = np.maximum(full[:n], 0.0)
    return LpSolution(x, float(lp.objective @ x), OPTIMAL, iters)


def _two_phase(lp: LinearProgram, tol: float, max_iter: int) -> LpSolution:
    r, n = lp.r, lp.n
    A = lp.inequality_matrix.copy()
    b = lp.inequality_rhs.copy()
    neg = b < 0
    # flip negative rows so the rhs is nonnegative; their slacks get -1
    sign = np.where(neg, -1.0, 1.0)
    A *= sign[:, None]
    b *= sign
    n_art = int(neg.sum())
    N = n + r + n_art
    T = np.zeros((r + 2, N + 1))
    T[:r, :n] = A
    T[:r, n:n + r] = np.diag(sign)
    art_cols = n + r + np.arange(n_art)
    art_rows = np.nonzero(neg)[0]
    T[art_rows, art_cols] = 1.0
    T[:r, -1] = b
    T[r, :n] = lp.objective           # real cost row
    T[r + 1, art_cols] = 1.0          # phase-1 cost: sum of artificials
    basis = np.arange(n, n + r)
    basis[art_rows] = art_cols
    # price out artificials from the phase-1 cost row
    T[r + 1] -= T[art_rows].sum(axis=0)

    it = 0
    while it < max_iter:
        costs = T[r + 1, :N]
        j = int(np.argmin(costs))
        if costs[j] >= -tol:
            break
        i = _lex_ratio_row(T, r, j, tol)
        if i is None:
            break  # phase-1 objective is bounded below; cannot happen
        _pivot(T, i, j)
        basis[i] = j
        it += 1
    if it >= max_iter:
        return LpSolution(None, None, ITERATION_LIMIT, it)
    if T[r + 1, -1] < -tol * 10:
        return LpSolution(None, None, INFEASIBLE, it)

    # drive any zero-level artificials out of the basis
    for pos in range(r):
        if basis[pos] >= n + r:
            row = T[pos, :n + r]
            cand = np.nonzero(np.abs(row) > tol)[0]
            if cand.size:
                _pivot(T, pos, int(cand[0]))
                basis[pos] = int(cand[0])
    T2 = np.delete(T[:r + 1], art_cols, axis=1)
    status, iters = _primal(T2, basis, r, n + r, tol, max_iter, start_iter=it)
    return _extract(T2, basis, lp, status, iters)


def solve_lp(lp: LinearProgram, tol_feas: float | None = None,
             tol_opt: float = 1e-8, max_iter: int | None = None) -> LpSolution:
    """Solve the LP to global optimality with deterministic pivoting.

    An `optimal` status guarantees primal feasibility within `tol_feas`
    (default 1e-8 * (1 + max|b|)); infeasible and unbounded problems are
    reported as such, never clamped.
    """
    r, n = lp.r, lp.n
    if tol_feas is None:
        tol_feas = 1e-8 * (1.0 + float(np.abs(lp.inequality_rhs).max(initial=0.0)))
    if max_iter is None:
        max_iter = 10 * (n + r)
    scale = max(1.0, float(np.abs(lp.inequality_matrix).max(initial=0.0)))
    tol = 1e-11 * scale

    b_nonneg = bool(np.all(lp.inequality_rhs >= 0))
    c_pos = bool(np.all(lp.objective > 0))
    if b_nonneg:
        T, basis, N = _slack_tableau(lp)
        status, iters = _primal(T, basis, r, N, tol, max_iter)
        sol = _extract(T, basis, lp, status, iters)
    elif c_pos:
        T, basis, N = _slack_tableau(lp)
        status, iters = _dual(T, basis, r, N, tol, max_iter)
        if status == ITERATION_LIMIT:
            # dual degeneracy stall: the two-phase route is guaranteed finite
            sol = _two_phase(lp, tol, max_iter)
        else:
            sol = _extract(T, basis, lp, status, iters)
    else:
        sol = _two_phase(lp, tol, max_iter)

    if sol.status == OPTIMAL:
        resid = lp.inequality_matrix @ sol.x - lp.inequality_rhs
        if resid.max(initial=0.0) > tol_feas:
            # numerically drifted vertex; report rather than return garbage
            return LpSolution(None, None, ITERATION_LIMIT, sol.iterations)
    return sol
