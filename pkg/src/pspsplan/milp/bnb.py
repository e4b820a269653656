"""Best-first branch-and-bound over the LP relaxation."""

from __future__ import annotations

import enum
import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .model import LinearArrays, MilpModel, ModelError, Sense
from .simplex import LpSolution, solve_lp

FEAS_TOL = 1e-6
INT_TOL = 1e-6
GAP_EPS = 1e-10


class Status(str, enum.Enum):
    OPTIMAL = "optimal_within_gap"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit_reached"
    NUMERICAL = "numerical_failure"


@dataclass(frozen=True)
class SolveOptions:
    relative_gap: float = 0.01
    time_limit: float = math.inf
    node_limit: int = 1_000_000
    deterministic_seed: int = 0
    # "simplex" is the built-in dense simplex; "highs" routes relaxations through scipy
    lp_engine: str = "simplex"

    def __post_init__(self):
        if self.relative_gap < 0:
            raise ValueError("relative_gap must be >= 0")
        if self.lp_engine not in ("simplex", "highs"):
            raise ValueError(f"unknown lp_engine {self.lp_engine!r}")


@dataclass
class SolveResult:
    status: Status
    objective: float = math.nan
    x: np.ndarray | None = None
    best_bound: float = math.nan
    gap: float = math.nan
    nodes: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    duals: np.ndarray | None = field(default=None, repr=False)

    @property
    def has_solution(self) -> bool:
        return self.x is not None


def relative_gap(objective: float, bound: float) -> float:
    if not (math.isfinite(objective) and math.isfinite(bound)):
        return math.inf
    return max(0.0, objective - bound) / max(abs(objective), GAP_EPS)


def _solve_relaxation(arr: LinearArrays, lb, ub, engine: str, warm=None) -> LpSolution:
    if engine == "highs":
        return _solve_highs(arr, lb, ub)
    return solve_lp(arr.c, arr.A, arr.senses, arr.rhs, lb, ub, warm=warm)


def _solve_highs(arr: LinearArrays, lb, ub) -> LpSolution:
    from scipy.optimize import linprog

    le = [i for i, s in enumerate(arr.senses) if s is Sense.LE]
    ge = [i for i, s in enumerate(arr.senses) if s is Sense.GE]
    eq = [i for i, s in enumerate(arr.senses) if s is Sense.EQ]
    A_ub = np.vstack([arr.A[le], -arr.A[ge]]) if (le or ge) else None
    b_ub = np.concatenate([arr.rhs[le], -arr.rhs[ge]]) if (le or ge) else None
    A_eq = arr.A[eq] if eq else None
    b_eq = arr.rhs[eq] if eq else None
    bounds = np.column_stack([np.where(np.isfinite(lb), lb, -np.inf), np.where(np.isfinite(ub), ub, np.inf)])
    res = linprog(arr.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 2:
        return LpSolution("infeasible")
    if res.status == 3:
        return LpSolution("unbounded")
    if res.status != 0:
        return LpSolution("numerical")
    m = len(arr.senses)
    y = np.zeros(m)
    if le or ge:
        marg = res.ineqlin.marginals
        y[le] = marg[: len(le)]
        y[ge] = -marg[len(le) :]
    if eq:
        y[eq] = res.eqlin.marginals
    return LpSolution("optimal", x=res.x, objective=float(res.fun), duals=y, reduced_costs=arr.c - arr.A.T @ y)


class _Rounder:
    """Row-lock aware rounding of integer variables.

    ``purify`` moves fractional integers of an LP solution onto adjacent
    integers when every row stays satisfied and the objective does not rise;
    the result is still an optimal solution of the same relaxation, just with
    fewer fractional entries.  ``round`` produces a full integer assignment
    for the polishing LP: each fractional variable goes to the neighbour that
    keeps its rows satisfied at the current activities, or to the nearest
    one when both or neither do.
    """

    def __init__(self, arr: LinearArrays, int_idx: np.ndarray):
        self.arr = arr
        self.int_idx = int_idx
        A = sparse.csc_matrix(arr.A)
        self.le = np.array([s is Sense.LE for s in arr.senses], dtype=bool)
        self.ge = np.array([s is Sense.GE for s in arr.senses], dtype=bool)
        self.eq = ~self.le & ~self.ge
        self.cols = {
            int(j): (A.indices[A.indptr[j] : A.indptr[j + 1]], A.data[A.indptr[j] : A.indptr[j + 1]])
            for j in int_idx
        }

    def _fits(self, rows, act) -> bool:
        r = self.arr.rhs[rows]
        tol = FEAS_TOL * (1.0 + np.abs(r))
        bad = (
            (self.le[rows] & (act > r + tol))
            | (self.ge[rows] & (act < r - tol))
            | (self.eq[rows] & (np.abs(act - r) > tol))
        )
        return not bad.any()

    def purify(self, x: np.ndarray) -> np.ndarray:
        x = x.copy()
        act = self.arr.A @ x
        c = self.arr.c
        for j in self.int_idx:
            v = x[j]
            lo, hi = math.floor(v), math.ceil(v)
            if min(v - lo, hi - v) <= INT_TOL:
                continue
            rows, vals = self.cols[int(j)]
            for target in sorted((lo, hi), key=lambda t: abs(t - v)):
                if c[j] * (target - v) > 1e-12:
                    continue
                moved = act[rows] + vals * (target - v)
                if self._fits(rows, moved):
                    act[rows] = moved
                    x[j] = target
                    break
        return x

    def round(self, x: np.ndarray) -> np.ndarray:
        act = self.arr.A @ x
        xi = x[self.int_idx].copy()
        for k, j in enumerate(self.int_idx):
            v = x[j]
            lo, hi = math.floor(v + INT_TOL), math.ceil(v - INT_TOL)
            if lo == hi:
                xi[k] = lo
                continue
            rows, vals = self.cols[int(j)]
            down = self._fits(rows, act[rows] + vals * (lo - v))
            up = self._fits(rows, act[rows] + vals * (hi - v))
            if down != up:
                target = lo if down else hi
            else:
                target = lo if v - lo < 0.5 else hi
            act[rows] += vals * (target - v)
            xi[k] = target
        return xi


def solve(model: MilpModel, options: SolveOptions | None = None) -> SolveResult:
    """Solve ``model`` to the requested relative gap.

    Branches on the most fractional integer variable (ties to the lowest id)
    and explores open nodes best-bound first, deeper nodes first among equal
    bounds.  Every incumbent is polished by re-solving the LP with its integer
    values fixed, so returned assignments satisfy all rows to solver accuracy.
    """
    options = options or SolveOptions()
    if model.num_variables == 0:
        raise ModelError("model has no variables")
    start = time.monotonic()
    arr = model.to_arrays()
    int_idx = np.nonzero(arr.integer)[0]
    lb0 = arr.lb.copy()
    ub0 = arr.ub.copy()
    lb0[int_idx] = np.ceil(lb0[int_idx] - INT_TOL)
    ub0[int_idx] = np.floor(ub0[int_idx] + INT_TOL)

    result = SolveResult(Status.INFEASIBLE)
    incumbent_obj = math.inf
    incumbent_x = None
    incumbent_duals = None
    lp_iters = 0
    nodes = 0
    counter = 0
    heap: list[tuple[float, int, int, np.ndarray, np.ndarray]] = []

    def evaluate(lb, ub, warm=None):
        nonlocal lp_iters
        sol = _solve_relaxation(arr, lb, ub, options.lp_engine, warm)
        lp_iters += sol.iterations
        if sol.status == "optimal" and len(int_idx):
            sol.x = rounder.purify(sol.x)
        return sol

    rounder = _Rounder(arr, int_idx)
    tried: set[bytes] = set()

    def try_incumbent(sol: LpSolution, lb, ub) -> None:
        nonlocal incumbent_obj, incumbent_x, incumbent_duals
        xi = np.clip(rounder.round(sol.x), lb[int_idx], ub[int_idx]) if len(int_idx) else np.zeros(0)
        key = xi.tobytes()
        if key in tried:
            return
        tried.add(key)
        flb, fub = lb.copy(), ub.copy()
        flb[int_idx] = xi
        fub[int_idx] = xi
        polished = evaluate(flb, fub, sol.basis) if len(int_idx) else sol
        if polished.status != "optimal":
            return
        x = polished.x.copy()
        x[int_idx] = xi
        obj = float(arr.c @ x)
        if obj < incumbent_obj - 1e-12:
            incumbent_obj = obj
            incumbent_x = x
            incumbent_duals = polished.duals

    root = evaluate(lb0, ub0)
    if root.status == "infeasible":
        return _finish(result, Status.INFEASIBLE, arr, start, nodes=1, iters=lp_iters)
    if root.status == "unbounded":
        return _finish(result, Status.UNBOUNDED, arr, start, nodes=1, iters=lp_iters)
    if root.status != "optimal":
        return _finish(result, Status.NUMERICAL, arr, start, nodes=1, iters=lp_iters)

    heapq.heappush(heap, (root.objective, 0, counter, lb0, ub0, root))
    best_bound = root.objective
    status = None
    while heap:
        bound, neg_depth, _, lb, ub, sol = heapq.heappop(heap)
        best_bound = bound
        if incumbent_x is not None:
            if relative_gap(incumbent_obj + arr.constant, bound + arr.constant) <= options.relative_gap:
                best_bound = min(best_bound, incumbent_obj)
                heap.clear()
                break
            if bound >= incumbent_obj - 1e-9 * max(1.0, abs(incumbent_obj)):
                continue
        if nodes >= options.node_limit or time.monotonic() - start > options.time_limit:
            heapq.heappush(heap, (bound, neg_depth, counter, lb, ub, sol))
            status = Status.LIMIT
            break
        nodes += 1
        frac = np.abs(sol.x[int_idx] - np.round(sol.x[int_idx])) if len(int_idx) else np.zeros(0)
        if len(int_idx) == 0 or np.all(frac <= INT_TOL):
            try_incumbent(sol, lb, ub)
            continue
        # most fractional; argmax returns the first (lowest id) among ties
        dist = np.where(frac > INT_TOL, 0.5 - np.abs(sol.x[int_idx] - np.floor(sol.x[int_idx]) - 0.5), -1.0)
        k = int(np.argmax(np.round(dist, 12)))
        j = int_idx[k]
        v = sol.x[j]
        # keep looking for better incumbents until the gap target is met
        if incumbent_x is None or relative_gap(incumbent_obj + arr.constant, bound + arr.constant) > options.relative_gap:
            try_incumbent(sol, lb, ub)
        for side in (0, 1):
            clb, cub = lb.copy(), ub.copy()
            if side == 0:
                cub[j] = math.floor(v)
            else:
                clb[j] = math.ceil(v)
            if clb[j] > cub[j]:
                continue
            child = evaluate(clb, cub, sol.basis)
            if child.status == "unbounded":
                return _finish(result, Status.UNBOUNDED, arr, start, nodes, lp_iters)
            if child.status == "numerical":
                return _finish(result, Status.NUMERICAL, arr, start, nodes, lp_iters)
            if child.status != "optimal":
                continue
            if child.objective >= incumbent_obj - 1e-9 * max(1.0, abs(incumbent_obj)):
                continue
            counter += 1
            heapq.heappush(heap, (child.objective, neg_depth - 1, counter, clb, cub, child))

    if not heap and status is None:
        if incumbent_x is None:
            return _finish(result, Status.INFEASIBLE, arr, start, nodes, lp_iters)
        # tree exhausted: the incumbent is proven optimal
        best_bound = incumbent_obj
        status = Status.OPTIMAL
    elif status is None:
        status = Status.OPTIMAL
    if status is Status.LIMIT and heap:
        best_bound = min(h[0] for h in heap)
        best_bound = min(best_bound, incumbent_obj)

    result.status = status
    result.nodes = nodes
    result.lp_iterations = lp_iters
    result.wall_time = time.monotonic() - start
    if incumbent_x is not None:
        result.x = incumbent_x
        result.objective = incumbent_obj + arr.constant
        result.best_bound = best_bound + arr.constant
        result.gap = relative_gap(result.objective, result.best_bound)
        result.duals = incumbent_duals
        if status is Status.OPTIMAL and result.gap > options.relative_gap:
            result.status = Status.LIMIT
    else:
        result.best_bound = best_bound + arr.constant
    return result


def _finish(result: SolveResult, status: Status, arr, start, nodes, iters) -> SolveResult:
    result.status = status
    result.nodes = nodes
    result.lp_iterations = iters
    result.wall_time = time.monotonic() - start
    return result
