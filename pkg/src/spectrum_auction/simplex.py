"""Dense revised simplex for packing LPs ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

The all-slack basis is feasible, so no phase one is needed.  Pricing is
Dantzig's largest reduced cost; after a run of degenerate pivots the solver
switches to Bland's rule until the objective moves again, which rules out
cycling.  The basis inverse is kept explicitly and refactorised periodically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
DEGENERATE_RUN = 50


class SimplexError(RuntimeError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    duals: np.ndarray
    objective: float
    iterations: int
    dual_objective: float

    @property
    def gap(self) -> float:
        return abs(self.dual_objective - self.objective)


def solve_packing_lp(
    c: np.ndarray,
    A,
    b: np.ndarray,
    *,
    max_iter: int | None = None,
    refactor_every: int = 100,
) -> LPResult:
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    A = sp.csc_matrix(A, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("dimension mismatch")
    if np.any(b < 0):
        raise ValueError("packing LP needs b >= 0")
    if np.any(A.data < 0):
        raise ValueError("packing LP needs A >= 0")
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    scale = max(1.0, float(np.max(np.abs(c))) if n else 1.0)
    dtol = PIVOT_TOL * scale
    AT = A.T.tocsr()
    A_cols = [A.indices[A.indptr[j]:A.indptr[j + 1]] for j in range(n)]
    A_vals = [A.data[A.indptr[j]:A.indptr[j + 1]] for j in range(n)]

    basis = np.arange(n, n + m)  # variable index of each basic row; slacks are n..n+m-1
    is_basic = np.zeros(n + m, dtype=bool)
    is_basic[basis] = True
    Binv = np.eye(m)
    xB = b.copy()
    cB = np.zeros(m)
    y = np.zeros(m)

    def refactor() -> None:
        nonlocal Binv, xB, y
        B = np.zeros((m, m))
        for r, var in enumerate(basis):
            if var < n:
                B[A_cols[var], r] = A_vals[var]
            else:
                B[var - n, r] = 1.0
        Binv = np.linalg.inv(B)
        xB = Binv @ b
        y = cB @ Binv

    bland = False
    degenerate = 0
    it = 0
    while True:
        if it >= max_iter:
            raise SimplexError(f"iteration limit {max_iter} reached")
        d = np.concatenate([c - AT @ y, -y])
        d[is_basic] = -np.inf
        if bland:
            cand = np.flatnonzero(d > dtol)
            if cand.size == 0:
                break
            q = int(cand[0])
        else:
            q = int(np.argmax(d))
            if d[q] <= dtol:
                break
        dq = float(d[q])

        if q < n:
            alpha = Binv[:, A_cols[q]] @ A_vals[q]
        else:
            alpha = Binv[:, q - n].copy()
        pos = alpha > PIVOT_TOL
        if not np.any(pos):
            raise SimplexError("LP is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(xB[pos], 0.0) / alpha[pos]
        theta = ratios.min()
        ties = np.flatnonzero(ratios <= theta + 1e-12)
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(alpha[ties])])

        xB = xB - theta * alpha
        xB[r] = theta
        piv = Binv[r] / alpha[r]
        Binv -= np.outer(alpha, piv)
        Binv[r] = piv
        leaving = basis[r]
        is_basic[leaving] = False
        is_basic[q] = True
        basis[r] = q
        cB[r] = c[q] if q < n else 0.0
        y = y + dq * piv
        it += 1

        if theta <= PIVOT_TOL:
            degenerate += 1
            if degenerate >= DEGENERATE_RUN:
                bland = True
        else:
            degenerate = 0
            bland = False
        if it % refactor_every == 0:
            refactor()

    refactor()
    x = np.zeros(n + m)
    x[basis] = np.maximum(xB, 0.0)
    x_struct = x[:n]
    if np.any(A @ x_struct > b + FEAS_TOL * np.maximum(1.0, np.abs(b))):
        raise SimplexError("final point violates constraints beyond tolerance")
    obj = float(c @ x_struct)
    duals = np.maximum(y, 0.0)
    return LPResult(x_struct, duals, obj, it, float(b @ duals))
