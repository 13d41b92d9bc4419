"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves   minimize c @ x   s.t.  A_ub @ x <= b_ub,  A_eq @ x == b_eq,  x >= 0.

Meant for the small load-decomposition programs in this package; there is
no sparse storage and no presolve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-9


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _iterate(T: np.ndarray, basis: list[int], ncols: int, max_iter: int) -> int:
    """Run simplex pivots on T until optimal. Returns pivot count."""
    m = T.shape[0] - 1
    for it in range(max_iter):
        reduced = T[-1, :ncols]
        entering = np.flatnonzero(reduced < -TOL)
        if entering.size == 0:
            return it
        col = int(entering[0])  # Bland: lowest index
        column = T[:m, col]
        rows = np.flatnonzero(column > TOL)
        if rows.size == 0:
            raise LPError("linear program is unbounded")
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + TOL]
        row = int(min(tied, key=lambda i: basis[i]))  # Bland: lowest basic index
        _pivot(T, row, col)
        basis[row] = col
    raise LPError(f"simplex did not converge in {max_iter} pivots")


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter: int = 100_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # columns: originals | one slack per <= row | artificials
    n_slack = m_ub
    A = np.zeros((m, n + n_slack))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    basis: list[int] = []
    art_rows = []
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis.append(n + i)
        else:
            basis.append(-1)
            art_rows.append(i)
    n_art = len(art_rows)
    width = n + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, : n + n_slack] = A
    T[:m, -1] = b
    for j, i in enumerate(art_rows):
        T[i, n + n_slack + j] = 1.0
        basis[i] = n + n_slack + j

    iterations = 0
    if n_art:
        T[-1, n + n_slack : width] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        iterations += _iterate(T, basis, width, max_iter)
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if -T[-1, -1] > 1e-7 * scale:
            raise LPError("linear program is infeasible")
        # drive zero-level artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= n + n_slack:
                cand = np.flatnonzero(np.abs(T[i, : n + n_slack]) > TOL)
                if cand.size == 0:
                    continue
                _pivot(T, i, int(cand[0]))
                basis[i] = int(cand[0])
            keep.append(i)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[i] for i in keep]
        T = np.delete(T, np.s_[n + n_slack : width], axis=1)
        m = len(keep)

    cost = np.zeros(n + n_slack)
    cost[:n] = c
    T[-1, :] = 0.0
    T[-1, : n + n_slack] = cost
    for i, j in enumerate(basis):
        if cost[j] != 0.0:
            T[-1] -= cost[j] * T[i]
    iterations += _iterate(T, basis, n + n_slack, max_iter)

    x = np.zeros(n + n_slack)
    for i, j in enumerate(basis):
        x[j] = T[i, -1]
    x = np.clip(x[:n], 0.0, None)
    return LPResult(x=x, objective=float(c @ x), iterations=iterations)
