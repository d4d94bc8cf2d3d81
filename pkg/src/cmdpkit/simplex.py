"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Small problems only: every pivot touches the full tableau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-10


class LPError(RuntimeError):
    pass


class InfeasibleLP(LPError):
    pass


class UnboundedLP(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    duals_eq: np.ndarray  # shadow prices of equality rows
    duals_ge: np.ndarray  # shadow prices of >= rows (non-positive for a max problem)
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _run(T: np.ndarray, basis: list[int], allowed: np.ndarray, max_iter: int) -> int:
    """Maximise the objective held in the last row of ``T`` (as reduced costs).

    The last row stores ``-c_j + c_B B^-1 A_j``; a negative entry improves.
    """
    m = T.shape[0] - 1
    for it in range(max_iter):
        costs = T[-1, :-1]
        candidates = np.flatnonzero((costs < -EPS) & allowed)
        if candidates.size == 0:
            return it
        col = int(candidates[0])
        column = T[:m, col]
        pos = column > EPS
        if not pos.any():
            raise UnboundedLP("objective is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + EPS * max(1.0, abs(best)))
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, row, col)
        basis[row] = col
    raise LPError("simplex iteration limit reached")


def solve_standard(c, A, b, max_iter: int = 50_000):
    """``max c.x`` subject to ``A x = b``, ``x >= 0``.

    Returns ``(x, value, y, iterations)`` where ``y`` solves ``B^T y = c_B`` on
    the original rows (``nan`` on rows found to be redundant).
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A1 = A * sign[:, None]
    b1 = b * sign

    # phase 1: artificials n..n+m-1
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A1
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b1
    T[-1, :n] = -A1.sum(0)
    T[-1, -1] = -b1.sum()
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, bool)
    iters = _run(T, basis, allowed, max_iter)
    if -T[-1, -1] > 1e-8 * max(1.0, np.abs(b1).sum()):
        raise InfeasibleLP(f"phase-one residual {-T[-1, -1]:.3e}")

    # drive artificials out of the basis; drop redundant rows
    keep = []
    for i in range(m):
        if basis[i] >= n:
            nz = np.flatnonzero(np.abs(T[i, :n]) > 1e-9)
            if nz.size:
                _pivot(T, i, int(nz[0]))
                basis[i] = int(nz[0])
                keep.append(i)
        else:
            keep.append(i)
    rows = keep + [m]
    T = T[rows][:, list(range(n)) + [n + m]]
    basis = [basis[i] for i in keep]

    # phase 2 objective row: -c + c_B B^-1 A
    T[-1] = 0.0
    T[-1, :n] = -c
    for i, j in enumerate(basis):
        T[-1] -= T[-1, j] * T[i]
    iters += _run(T, basis, np.ones(n, bool), max_iter)

    x = np.zeros(n)
    x[basis] = T[:-1, -1]
    x[np.abs(x) < EPS] = 0.0

    y = np.full(m, np.nan)
    B = A[keep][:, basis]
    y[keep] = np.linalg.solve(B.T, c[basis])
    return x, float(c @ x), y, iters


def linprog_max(c, A_eq=None, b_eq=None, A_ge=None, b_ge=None, free=None) -> LPResult:
    """``max c.x`` s.t. ``A_eq x = b_eq``, ``A_ge x >= b_ge``; ``x >= 0`` except ``free``.

    Free variables are split into positive and negative parts.
    """
    c = np.asarray(c, float)
    n = c.size
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, float)
    A_ge = np.zeros((0, n)) if A_ge is None else np.asarray(A_ge, float)
    b_ge = np.zeros(0) if b_ge is None else np.asarray(b_ge, float)
    free = np.zeros(n, bool) if free is None else np.asarray(free, bool)
    nf = int(free.sum())
    me, mg = len(b_eq), len(b_ge)

    def widen(M):
        return np.hstack([M, -M[:, free]])

    A = np.vstack([
        np.hstack([widen(A_eq), np.zeros((me, mg))]),
        np.hstack([widen(A_ge), -np.eye(mg)]),
    ])
    cs = np.concatenate([c, -c[free], np.zeros(mg)])
    b = np.concatenate([b_eq, b_ge])
    xs, value, y, iters = solve_standard(cs, A, b)
    x = xs[:n].copy()
    x[free] -= xs[n:n + nf]
    return LPResult(x=x, value=value, duals_eq=y[:me], duals_ge=y[me:], iterations=iters)
