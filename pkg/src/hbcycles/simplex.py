"""Dense two-phase simplex for small linear programs.

Solves min c.x subject to A x = b, x >= 0 on a full tableau with Bland's
anti-cycling rule (entering: lowest eligible index; leaving: lowest basic
index among the minimal ratios), so every solve is deterministic and
finite.  The cycle-feasibility LPs are heavily degenerate (almost every
right-hand side is zero), so accumulated pivot rounding is controlled by
refactorization: after each optimal pass the tableau is rebuilt exactly
from the original data and the pass repeats until a fresh tableau accepts
the basis with no further pivots.  Problem sizes here are at most a few
hundred variables, where a dense tableau beats anything fancier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PIVOT_TOL = 1e-10
_FEAS_TOL = 1e-8


@dataclass
class SimplexResult:
    status: str            # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray | None
    objective: float | None
    iterations: int


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _canonical_tableau(a_full: np.ndarray, b: np.ndarray,
                       basis: np.ndarray) -> np.ndarray:
    """Exact tableau [B^-1 A | B^-1 b] for the given basis."""
    basis_matrix = a_full[:, basis]
    reduced = np.linalg.solve(basis_matrix, np.hstack([a_full, b[:, None]]))
    return reduced


def _iterate(tableau: np.ndarray, basis: np.ndarray, cost: np.ndarray,
             max_iter: int) -> tuple[str, int]:
    """Run simplex pivots in place until optimal/unbounded/limit."""
    n_cols = tableau.shape[1] - 1
    it = 0
    while it < max_iter:
        reduced = cost - cost[basis] @ tableau[:, :n_cols]
        candidates = np.flatnonzero(reduced < -_PIVOT_TOL)
        if candidates.size == 0:
            return "optimal", it
        col = int(candidates[0])  # Bland: lowest index enters
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(tableau[:, col] > _PIVOT_TOL,
                              tableau[:, -1] / tableau[:, col], np.inf)
        min_ratio = ratios.min()
        if not np.isfinite(min_ratio):
            return "unbounded", it
        ties = np.flatnonzero(ratios <= min_ratio + _PIVOT_TOL)
        row = int(ties[np.argmin(basis[ties])])  # Bland: lowest basic index leaves
        _pivot(tableau, basis, row, col)
        it += 1
    return "iteration_limit", it


def _optimize(a_full: np.ndarray, b: np.ndarray, cost: np.ndarray,
              basis: np.ndarray, max_iter: int) -> tuple[str, int]:
    """Iterate with periodic exact refactorization until a fresh tableau
    confirms optimality with zero further pivots."""
    total = 0
    while total <= max_iter:
        tableau = _canonical_tableau(a_full, b, basis)
        status, it = _iterate(tableau, basis, cost, max_iter - total)
        total += it
        if status != "optimal":
            return status, total
        if it == 0:
            return "optimal", total
    return "iteration_limit", total


def solve_canonical(cost, a_eq, b_eq, max_iter: int = 20000) -> SimplexResult:
    """Minimize cost.x subject to a_eq x = b_eq, x >= 0."""
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    c = np.array(cost, dtype=float)
    m, n = a.shape

    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    # Phase 1: artificials form the starting basis.
    a_full = np.hstack([a, np.eye(m)])
    basis = np.arange(n, n + m)
    phase1_cost = np.concatenate([np.zeros(n), np.ones(m)])
    status, it1 = _optimize(a_full, b, phase1_cost, basis, max_iter)
    if status != "optimal":
        return SimplexResult("iteration_limit", None, None, it1)
    x_basic = np.linalg.solve(a_full[:, basis], b)
    scale = max(1.0, float(np.abs(b).max()))
    if phase1_cost[basis] @ x_basic > _FEAS_TOL * scale:
        return SimplexResult("infeasible", None, None, it1)

    # Drive leftover artificials out of the basis (or drop redundant rows).
    tableau = _canonical_tableau(a_full, b, basis)
    keep = np.ones(m, dtype=bool)
    for row in range(m):
        if basis[row] >= n:
            pivots = np.flatnonzero(np.abs(tableau[row, :n]) > _PIVOT_TOL)
            if pivots.size:
                _pivot(tableau, basis, row, int(pivots[0]))
            else:
                keep[row] = False
    if not keep.all():
        a = a[keep]
        b = b[keep]
        basis = basis[keep]
    a_full = a  # artificial columns retired

    # Phase 2 on the original columns.
    status, it2 = _optimize(a_full, b, c, basis, max_iter)
    if status != "optimal":
        return SimplexResult(status, None, None, it1 + it2)

    x = np.zeros(n)
    x[basis] = np.linalg.solve(a_full[:, basis], b)
    return SimplexResult("optimal", x, float(c @ x), it1 + it2)
