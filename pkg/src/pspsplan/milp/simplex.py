"""Dense revised primal simplex for bounded-variable LPs.

Solves ``min c'x  s.t.  A x (<=, =, >=) b,  lb <= x <= ub`` where bounds may be
infinite.  Every row receives a slack column so the working system is
``[A | I] (x, s) = b``; rows whose initial residual cannot be absorbed by the
slack get an artificial column for phase 1.  Pricing is Dantzig's rule with a
switch to Bland's rule after a run of degenerate pivots, which guarantees
termination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.linalg.blas import dger

from .model import Sense

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-11
REFACTOR_EVERY = 64
DEGENERATE_RUN = 30


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | iteration_limit | numerical
    x: np.ndarray | None = None
    objective: float = math.nan
    duals: np.ndarray | None = None  # one per row, sign convention of the Lagrangian c - A'y
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    basis: "Basis | None" = None


@dataclass(frozen=True)
class Basis:
    """Final basis of a solve, reusable as a warm start after bound changes.

    ``code`` marks each column as nonbasic at its lower bound (0), at its
    upper bound (1) or elsewhere (2, basic or between bounds).
    """

    basis: np.ndarray
    code: np.ndarray
    val: np.ndarray
    art_rows: np.ndarray
    art_sign: np.ndarray


class _Numerical(RuntimeError):
    pass


def _rank1(M: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``M - u v'`` computed in place when BLAS allows it."""
    if M.flags.f_contiguous:
        return dger(-1.0, u, v, a=M, overwrite_a=True)
    M -= np.outer(u, v)
    return M


def solve_lp(
    c: np.ndarray,
    A: np.ndarray,
    senses: Sequence[Sense],
    b: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    max_iter: int | None = None,
    warm: Basis | None = None,
) -> LpSolution:
    """Solve the LP; ``warm`` (a basis from an earlier solve of the same rows
    with different bounds) starts a dual simplex instead of phase 1."""
    m, n = A.shape
    if np.any(lb > ub + PRIMAL_TOL) or np.any(lb == math.inf) or np.any(ub == -math.inf):
        return LpSolution("infeasible")
    spent = 0
    if warm is not None:
        try:
            sx = _Simplex(c, A, senses, b, lb, ub, max_iter, warm)
            sol = sx.run_dual()
            spent = sx.iterations
            # infeasibility claims are confirmed by a cold solve
            if sol is not None and sol.status == "optimal":
                return sol
        except (_Numerical, np.linalg.LinAlgError):
            pass
    try:
        sol = _Simplex(c, A, senses, b, lb, ub, max_iter).run()
    except (_Numerical, np.linalg.LinAlgError):
        sol = LpSolution("numerical")
    sol.iterations += spent
    return sol


class _Simplex:
    def __init__(self, c, A, senses, b, lb, ub, max_iter, warm: Basis | None = None):
        m, n = A.shape
        self.m, self.n = m, n
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c_struct = np.asarray(c, dtype=float)
        self.max_iter = max_iter or 50 * (m + n) + 1000
        self.iterations = 0

        s_lb = np.zeros(m)
        s_ub = np.zeros(m)
        for i, s in enumerate(senses):
            if s is Sense.LE:
                s_ub[i] = math.inf
            elif s is Sense.GE:
                s_lb[i] = -math.inf
        x_lb = np.minimum(np.asarray(lb, float), np.asarray(ub, float))
        x_ub = np.asarray(ub, float)
        if warm is not None:
            self._setup_warm(x_lb, x_ub, s_lb, s_ub, warm)
            return

        # nonbasic starting values: the point of [lb, ub] closest to zero keeps
        # most rows satisfiable by their slack, so phase 1 stays short
        x0 = np.clip(0.0, x_lb, x_ub)
        resid = self.b - self.A @ x0

        basis = []
        art_rows = []
        for i in range(m):
            r = resid[i]
            if s_lb[i] - PRIMAL_TOL <= r <= s_ub[i] + PRIMAL_TOL:
                basis.append(n + i)
            else:
                art_rows.append(i)
                basis.append(-1)
        k = len(art_rows)
        art_sign = np.array([1.0 if resid[i] >= 0 else -1.0 for i in art_rows])
        for j, i in enumerate(art_rows):
            basis[i] = n + m + j
        self._install(
            np.array(basis, dtype=int),
            np.array(art_rows, dtype=int),
            art_sign,
            np.concatenate([x_lb, s_lb, np.zeros(k)]),
            np.concatenate([x_ub, s_ub, np.full(k, math.inf)]),
            np.concatenate([x0, np.zeros(m), np.zeros(k)]),
        )

    def _setup_warm(self, x_lb, x_ub, s_lb, s_ub, warm: Basis) -> None:
        k = len(warm.art_rows)
        lb = np.concatenate([x_lb, s_lb, np.zeros(k)])
        ub = np.concatenate([x_ub, s_ub, np.zeros(k)])  # artificials stay frozen
        if len(warm.code) != len(lb):
            raise _Numerical("warm basis does not match the model")
        kept = np.clip(warm.val, lb, ub)
        val = np.where(warm.code == 0, lb, np.where(warm.code == 1, ub, kept))
        val = np.where(np.isfinite(val), val, kept)
        self._install(warm.basis.copy(), warm.art_rows, warm.art_sign, lb, ub, val)

    def _install(self, basis, art_rows, art_sign, lb, ub, val) -> None:
        n, m = self.n, self.m
        k = len(art_rows)
        total = n + m + k
        self.n_art = k
        self.art_rows = art_rows
        self.art_sign = art_sign
        self.lb, self.ub, self.val = lb, ub, val
        self.basis = basis
        self.is_basic = np.zeros(total, dtype=bool)
        self.is_basic[self.basis] = True
        # row position of each artificial column
        self.art_row_of = np.full(total, -1)
        for j, i in enumerate(art_rows):
            self.art_row_of[n + m + j] = i
        self.total = total
        self._refactor()

    def state(self) -> Basis:
        nb = ~self.is_basic
        code = np.full(self.total, 2, dtype=np.int8)
        code[nb & (self.val <= self.lb + PRIMAL_TOL)] = 0
        code[nb & (self.val >= self.ub - PRIMAL_TOL) & (code != 0)] = 1
        return Basis(self.basis.copy(), code, self.val.copy(), self.art_rows, self.art_sign)

    # -- linear algebra helpers ---------------------------------------------

    def column(self, j: int) -> np.ndarray:
        n, m = self.n, self.m
        if j < n:
            return self.A[:, j]
        col = np.zeros(m)
        if j < n + m:
            col[j - n] = 1.0
        else:
            i = self.art_row_of[j]
            col[i] = self.art_sign[j - n - m]
        return col

    def _refactor(self) -> None:
        """Rebuild B^-1 exploiting that most basic columns are unit vectors.

        With unit columns covering rows U and structural columns C, the
        remaining rows R give a square block C_R; only that block is inverted.
        """
        m, n = self.m, self.n
        if m == 0:
            self.Binv = np.zeros((0, 0), order="F")
            return
        struct_pos, unit_pos, unit_rows, unit_sign = [], [], [], []
        for pos, j in enumerate(self.basis):
            if j < n:
                struct_pos.append(pos)
            elif j < n + m:
                unit_pos.append(pos)
                unit_rows.append(j - n)
                unit_sign.append(1.0)
            else:
                unit_pos.append(pos)
                unit_rows.append(self.art_row_of[j])
                unit_sign.append(self.art_sign[j - n - m])
        covered = np.zeros(m, dtype=bool)
        covered[unit_rows] = True
        if covered.sum() != len(unit_rows):
            raise _Numerical("singular basis")
        R = np.nonzero(~covered)[0]
        Binv = np.zeros((m, m), order="F")
        unit_pos = np.array(unit_pos, dtype=int)
        unit_rows = np.array(unit_rows, dtype=int)
        unit_sign = np.array(unit_sign)
        Binv[unit_pos, unit_rows] = unit_sign
        if struct_pos:
            C = self.A[:, self.basis[struct_pos]]
            Cinv = np.linalg.inv(C[R])
            if not np.all(np.isfinite(Cinv)):
                raise _Numerical("singular basis")
            Binv[np.ix_(struct_pos, R)] = Cinv
            if len(unit_pos):
                Cu = sparse.csr_matrix(C[unit_rows])
                Binv[np.ix_(unit_pos, R)] = -unit_sign[:, None] * (Cu @ Cinv)
        self.Binv = Binv
        self._recompute_basic_values()

    def _recompute_basic_values(self) -> None:
        nb = ~self.is_basic
        rhs = self.b.copy()
        idx = np.nonzero(nb)[0]
        for j in idx:
            v = self.val[j]
            if v != 0.0:
                rhs -= v * self.column(j)
        self.val[self.basis] = self.Binv @ rhs

    def reduced_costs(self, cost: np.ndarray, y: np.ndarray) -> np.ndarray:
        n, m = self.n, self.m
        d = np.empty(self.total)
        d[:n] = cost[:n] - y @ self.A
        d[n : n + m] = cost[n : n + m] - y
        if self.n_art:
            d[n + m :] = cost[n + m :] - y[self.art_rows] * self.art_sign
        return d

    # -- main loop ----------------------------------------------------------

    def run(self) -> LpSolution:
        n, m = self.n, self.m
        if self.n_art:
            cost1 = np.zeros(self.total)
            cost1[n + m :] = 1.0
            status = self._optimize(cost1)
            if status != "optimal":
                return LpSolution(status, iterations=self.iterations)
            infeas = float(np.sum(self.val[n + m :]))
            if infeas > 1e-7 * max(1.0, float(np.max(np.abs(self.b), initial=0.0))):
                return LpSolution("infeasible", iterations=self.iterations)
            # artificials are frozen at zero for phase 2
            self.ub[n + m :] = 0.0
            self.val[n + m :] = np.where(self.is_basic[n + m :], self.val[n + m :], 0.0)
        cost2 = np.zeros(self.total)
        cost2[:n] = self.c_struct
        status = self._optimize(cost2)
        if status != "optimal":
            return LpSolution(status, iterations=self.iterations)
        return self._result(cost2)

    def _result(self, cost2: np.ndarray) -> LpSolution:
        n, m = self.n, self.m
        self._refactor()
        x = self.val[:n].copy()
        y = cost2[self.basis] @ self.Binv if m else np.zeros(0)
        d = self.reduced_costs(cost2, y)
        resid = self.A @ x - self.b if m else np.zeros(0)
        slack = self.val[n : n + m]
        scale = 1.0 + float(np.max(np.abs(self.b), initial=0.0))
        if m and np.max(np.abs(resid + slack)) > 1e-7 * scale:
            raise _Numerical("row residual too large after refactorisation")
        if np.any(self.val < self.lb - 1e-7) or np.any(self.val > self.ub + 1e-7):
            raise _Numerical("bound drift")
        return LpSolution(
            "optimal",
            x=x,
            objective=float(self.c_struct @ x),
            duals=y,
            reduced_costs=d[:n],
            iterations=self.iterations,
            basis=self.state(),
        )

    def run_dual(self) -> LpSolution | None:
        """Bounded dual simplex from a dual-feasible warm basis.

        Returns None when the basis is not dual feasible, and an
        ``infeasible`` solution when a row admits no entering column.
        """
        n, m = self.n, self.m
        cost = np.zeros(self.total)
        cost[:n] = self.c_struct
        lb, ub, val = self.lb, self.ub, self.val
        fixed = (ub - lb) <= 0.0

        def duals():
            y = cost[self.basis] @ self.Binv if m else np.zeros(0)
            return self.reduced_costs(cost, y)

        d = duals()
        nb = ~self.is_basic & ~fixed
        at_lb = val <= lb + PRIMAL_TOL
        at_ub = val >= ub - PRIMAL_TOL
        slack_d = 1e-7
        if np.any(nb & at_lb & (d < -slack_d)) or np.any(nb & at_ub & ~at_lb & (d > slack_d)):
            return None
        if np.any(nb & ~at_lb & ~at_ub & (np.abs(d) > slack_d)):
            return None

        since_refactor = 0
        while True:
            if self.iterations >= self.max_iter:
                return None
            xb = val[self.basis]
            below = lb[self.basis] - xb
            above = xb - ub[self.basis]
            viol = np.maximum(below, above)
            r = int(np.argmax(viol)) if m else 0
            if not m or viol[r] <= PRIMAL_TOL:
                break
            rho = self.Binv[r]
            row = np.empty(self.total)
            row[:n] = rho @ self.A
            row[n : n + m] = rho
            if self.n_art:
                row[n + m :] = rho[self.art_rows] * self.art_sign
            at_lb = val <= lb + PRIMAL_TOL
            at_ub = val >= ub - PRIMAL_TOL
            between = ~at_lb & ~at_ub
            cand = ~self.is_basic & ~fixed
            if below[r] > above[r]:
                # x_r must rise: row coefficient and step direction of opposite sign
                target = lb[self.basis[r]]
                ok = cand & (((at_lb | between) & (row < -PIVOT_TOL)) | ((at_ub | between) & (row > PIVOT_TOL)))
            else:
                target = ub[self.basis[r]]
                ok = cand & (((at_lb | between) & (row > PIVOT_TOL)) | ((at_ub | between) & (row < -PIVOT_TOL)))
            if not ok.any():
                return LpSolution("infeasible", iterations=self.iterations)
            ratio = np.full(len(row), math.inf)
            ratio[ok] = np.abs(d[ok]) / np.abs(row[ok])
            rmin = float(ratio.min())
            ties = np.nonzero(ratio <= rmin + 1e-12)[0]
            q = int(ties[np.argmax(np.abs(row[ties]))])
            col = self.Binv @ self.column(q)
            piv = col[r]
            if abs(piv) < PIVOT_TOL:
                raise _Numerical("tiny pivot")
            step = (val[self.basis[r]] - target) / piv
            self.iterations += 1
            val[q] += step
            val[self.basis] = xb - col * step
            out = self.basis[r]
            val[out] = target
            d = d - (d[q] / row[q]) * row
            d[q] = 0.0
            prow = self.Binv[r] / piv
            self.Binv = _rank1(self.Binv, col, prow)
            self.Binv[r] = prow
            self.is_basic[out] = False
            self.is_basic[q] = True
            self.basis[r] = q
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self._refactor()
                d = duals()
                since_refactor = 0

        # primal feasible; a primal pass absorbs any drift in the duals
        status = self._optimize(cost)
        if status != "optimal":
            return None
        return self._result(cost)

    def _optimize(self, cost: np.ndarray) -> str:
        bland = False
        stall = 0
        last_obj = math.inf
        since_refactor = 0
        lb, ub, val = self.lb, self.ub, self.val
        fixed = (ub - lb) <= 0.0
        while True:
            if self.iterations >= self.max_iter:
                return "iteration_limit"
            y = cost[self.basis] @ self.Binv if self.m else np.zeros(0)
            d = self.reduced_costs(cost, y)
            at_lb = val <= lb + PRIMAL_TOL
            at_ub = val >= ub - PRIMAL_TOL
            free = ~at_lb & ~at_ub
            can_up = ~self.is_basic & ~fixed & (at_lb | free) & (d < -DUAL_TOL)
            can_down = ~self.is_basic & ~fixed & (at_ub | free) & (d > DUAL_TOL)
            eligible = can_up | can_down
            if not eligible.any():
                return "optimal"
            if bland:
                j = int(np.argmax(eligible))
            else:
                score = np.where(eligible, np.abs(d), -1.0)
                j = int(np.argmax(score))
            direction = 1.0 if can_up[j] else -1.0

            alpha = self.Binv @ self.column(j)
            delta = -direction * alpha  # change of basic values per unit step
            t_max = ub[j] - val[j] if direction > 0 else val[j] - lb[j]
            leave = -1
            bvals = val[self.basis]
            blb = lb[self.basis]
            bub = ub[self.basis]
            dec = delta < -PIVOT_TOL
            inc = delta > PIVOT_TOL
            ratios = np.full(self.m, math.inf)
            md = dec & np.isfinite(blb)
            mi = inc & np.isfinite(bub)
            ratios[md] = (bvals[md] - blb[md]) / -delta[md]
            ratios[mi] = np.minimum(ratios[mi], (bub[mi] - bvals[mi]) / delta[mi])
            ratios = np.maximum(ratios, 0.0)
            if self.m:
                rmin = float(np.min(ratios))
                if rmin < t_max:
                    ties = np.nonzero(ratios <= rmin + PRIMAL_TOL)[0]
                    if bland:
                        leave = int(ties[np.argmin(self.basis[ties])])
                    else:
                        leave = int(ties[np.argmax(np.abs(alpha[ties]))])
                    t = float(ratios[leave])
                else:
                    t = t_max
            else:
                t = t_max
            if not math.isfinite(t):
                return "unbounded"

            self.iterations += 1
            val[j] += direction * t
            if self.m:
                val[self.basis] = bvals + delta * t
            if leave >= 0:
                out = self.basis[leave]
                # place leaving variable exactly on the bound it reached
                if delta[leave] < 0:
                    val[out] = lb[out]
                else:
                    val[out] = ub[out]
                piv = alpha[leave]
                if abs(piv) < PIVOT_TOL:
                    raise _Numerical("tiny pivot")
                row = self.Binv[leave] / piv
                self.Binv = _rank1(self.Binv, alpha, row)
                self.Binv[leave] = row
                self.is_basic[out] = False
                self.is_basic[j] = True
                self.basis[leave] = j
                since_refactor += 1
                if since_refactor >= REFACTOR_EVERY:
                    self._refactor()
                    since_refactor = 0
            obj = float(cost @ val)
            if obj < last_obj - 1e-12 * max(1.0, abs(last_obj) if math.isfinite(last_obj) else 1.0):
                last_obj = obj
                stall = 0
                bland = False
            else:
                stall += 1
                if stall >= DEGENERATE_RUN:
                    bland = True
