"""Dense two-phase simplex method with Bland's anti-cycling rule.

Only meant for the small problems arising in face enumeration and the
boundedness probe (a few dozen rows at most), where determinism matters
more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LpNumericalFailure

PIVOT_TOL = 1e-11


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    fun: float
    iterations: int


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]
    basis[row] = col


def _run(T, basis, n_allowed, max_iter, iters):
    """Iterate on tableau ``T`` (last row = reduced costs | -objective)."""
    m = T.shape[0] - 1
    while True:
        if iters >= max_iter:
            raise LpNumericalFailure(f"simplex exceeded {max_iter} iterations")
        rc = T[-1, :n_allowed]
        candidates = np.flatnonzero(rc < -PIVOT_TOL)
        if candidates.size == 0:
            return "optimal", iters
        col = int(candidates[0])  # Bland: lowest index enters
        column = T[:m, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return "unbounded", iters
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        row = int(min(ties, key=lambda i: basis[i]))  # Bland: lowest basic leaves
        _pivot(T, basis, row, col)
        iters += 1


def solve_standard_form(
    c, A, b, *, feas_tol: float = 1e-9, max_iter: int | None = None
) -> LpSolution:
    """Minimize ``c @ x`` subject to ``A @ x == b`` and ``x >= 0``."""
    A = np.array(A, dtype=float, ndmin=2)
    b = np.array(b, dtype=float).ravel()
    c = np.array(c, dtype=float).ravel()
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 100

    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign

    # phase one: artificials n..n+m-1 form the starting basis
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))

    status, iters = _run(T, basis, n + m, max_iter, 0)
    infeasibility = -T[-1, -1]
    if infeasibility > feas_tol * max(1.0, float(np.abs(b).max(initial=0.0))):
        return LpSolution("infeasible", None, float("nan"), iters)

    # drive artificials out of the basis; drop rows that are redundant
    keep = []
    for i in range(m):
        if basis[i] >= n:
            nz = np.flatnonzero(np.abs(T[i, :n]) > PIVOT_TOL)
            if nz.size == 0:
                continue
            _pivot(T, basis, i, int(nz[0]))
            iters += 1
        keep.append(i)
    T = np.vstack([T[keep][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))])
    basis = [basis[i] for i in keep]

    # phase two
    cb = c[basis]
    T[-1, :n] = c - cb @ T[:-1, :n]
    T[-1, -1] = -cb @ T[:-1, -1]
    status, iters = _run(T, basis, n, max_iter, iters)
    if status == "unbounded":
        return LpSolution("unbounded", None, float("-inf"), iters)
    x = np.zeros(n)
    x[basis] = T[:-1, -1]
    return LpSolution("optimal", x, float(c @ x), iters)


def linprog_ge(c, G, h, *, feas_tol: float = 1e-9, max_iter: int | None = None) -> LpSolution:
    """Minimize ``c @ y`` over free ``y`` subject to ``G @ y >= h``.

    ``y`` is split as ``p - q`` and each row receives a surplus variable.
    """
    G = np.array(G, dtype=float, ndmin=2)
    h = np.array(h, dtype=float).ravel()
    c = np.array(c, dtype=float).ravel()
    m, k = G.shape
    A = np.hstack([G, -G, -np.eye(m)])
    cost = np.concatenate([c, -c, np.zeros(m)])
    sol = solve_standard_form(cost, A, h, feas_tol=feas_tol, max_iter=max_iter)
    if sol.x is None:
        return sol
    y = sol.x[:k] - sol.x[k : 2 * k]
    return LpSolution(sol.status, y, sol.fun, sol.iterations)


def find_feasible_point(G, h, *, feas_tol: float = 1e-9, max_iter: int | None = None):
    """Return some ``y`` with ``G @ y >= h``, or ``None`` when none exists."""
    G = np.array(G, dtype=float, ndmin=2)
    sol = linprog_ge(np.zeros(G.shape[1]), G, h, feas_tol=feas_tol, max_iter=max_iter)
    return sol.x if sol.status == "optimal" else None
