import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog, milp, LinearConstraint, Bounds

from pspsplan.milp import MilpModel, ModelError, Sense, SolveOptions, Status, export_model, solve, solve_lp, to_lp, to_mps
from pspsplan.milp.export import safe_names

highspy = pytest.importorskip("highspy")


# -- model container ----------------------------------------------------------


def test_add_variable_examples():
    m = MilpModel()
    assert m.add_variable("continuous", 0, math.inf, "x") == 0
    b = m.add_variable("binary", -5, 7, "b")
    assert (m.variables[b].lb, m.variables[b].ub) == (0.0, 1.0)
    with pytest.raises(ModelError, match="exceeds"):
        m.add_variable("continuous", 1, 0, "bad")
    with pytest.raises(ModelError, match="duplicate"):
        m.add_variable("continuous", 0, 1, "x")


def test_add_constraint_merges_and_checks_ids():
    m = MilpModel()
    x = m.add_variable("continuous", 0, 10, "x")
    c = m.add_constraint([(x, 1.0), (x, 2.0)], "<=", 3, "c")
    assert m.constraints[c].coeffs == {x: 3.0}
    with pytest.raises(ModelError, match="unknown variable"):
        m.add_constraint([(5, 1.0)], "<=", 1, "d")


# -- solver examples ------------------------------------------------------------


def test_one_variable_lp():
    m = MilpModel()
    x = m.add_variable("continuous", 0, math.inf, "x")
    m.add_constraint([(x, 1)], "<=", 3)
    m.set_objective([(x, -1)])
    r = solve(m)
    assert r.status is Status.OPTIMAL
    assert r.objective == pytest.approx(-3) and r.x[0] == pytest.approx(3)


def test_binary_pair():
    m = MilpModel()
    x = m.add_variable("binary", name="x")
    y = m.add_variable("binary", name="y")
    m.add_constraint([(x, 1), (y, 1)], "<=", 1.5)
    m.set_objective([(x, -1), (y, -1)])
    r = solve(m, SolveOptions(relative_gap=0))
    assert r.objective == pytest.approx(-1)
    assert sorted(r.x) == [0.0, 1.0]


def test_infeasible_and_unbounded():
    m = MilpModel()
    x = m.add_variable("continuous", -math.inf, math.inf, "x")
    m.add_constraint([(x, 1)], ">=", 2)
    m.add_constraint([(x, 1)], "<=", 1)
    assert solve(m).status is Status.INFEASIBLE
    u = MilpModel()
    x = u.add_variable("continuous", 0, math.inf, "x")
    u.set_objective([(x, -1)])
    assert solve(u).status is Status.UNBOUNDED


def test_integer_infeasible_but_lp_feasible():
    m = MilpModel()
    x = m.add_variable("integer", 0, 10, "x")
    m.add_constraint([(x, 2)], "=", 3)
    assert solve(m).status is Status.INFEASIBLE


def test_empty_model_rejected():
    with pytest.raises(ModelError):
        solve(MilpModel())


# -- LP against HiGHS, duality certificate -------------------------------------


def _random_lp(rng, m, n):
    A = rng.integers(-5, 6, (m, n)).astype(float) * (rng.random((m, n)) < 0.6)
    x0 = rng.uniform(0, 3, n)
    act = A @ x0
    senses = rng.choice(["<=", ">=", "="], m, p=[0.5, 0.3, 0.2])
    rhs = np.where(senses == "<=", act + rng.uniform(0, 2, m), np.where(senses == ">=", act - rng.uniform(0, 2, m), act))
    lb = np.where(rng.random(n) < 0.2, -math.inf, 0.0)
    ub = np.where(rng.random(n) < 0.5, rng.uniform(3, 6, n), math.inf)
    c = rng.integers(-4, 5, n).astype(float)
    return c, A, [Sense(s) for s in senses], rhs, lb, ub


def _highs_lp(c, A, senses, rhs, lb, ub):
    le = [i for i, s in enumerate(senses) if s is Sense.LE]
    ge = [i for i, s in enumerate(senses) if s is Sense.GE]
    eq = [i for i, s in enumerate(senses) if s is Sense.EQ]
    A_ub = np.vstack([A[le], -A[ge]]) if le or ge else None
    b_ub = np.concatenate([rhs[le], -rhs[ge]]) if le or ge else None
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A[eq] if eq else None, b_eq=rhs[eq] if eq else None,
                  bounds=list(zip(lb, ub)), method="highs")
    return {0: "optimal", 2: "infeasible", 3: "unbounded"}[res.status], res.fun


def _dual_objective(sol, A, senses, rhs, lb, ub, c):
    y = sol.duals
    d = c - A.T @ y
    for yi, s in zip(y, senses):
        if s is Sense.LE:
            assert yi <= 1e-7
        elif s is Sense.GE:
            assert yi >= -1e-7
    total = float(rhs @ y)
    for j, dj in enumerate(d):
        if dj > 1e-9:
            assert math.isfinite(lb[j])
            total += dj * lb[j]
        elif dj < -1e-9:
            assert math.isfinite(ub[j])
            total += dj * ub[j]
    return total


@pytest.mark.parametrize("seed", range(60))
def test_lp_matches_highs_with_dual_certificate(seed):
    rng = np.random.default_rng(seed)
    c, A, senses, rhs, lb, ub = _random_lp(rng, int(rng.integers(2, 9)), int(rng.integers(2, 9)))
    sol = solve_lp(c, A, senses, rhs, lb, ub)
    status, ref = _highs_lp(c, A, senses, rhs, lb, ub)
    assert sol.status == status
    if status == "optimal":
        assert sol.objective == pytest.approx(ref, abs=1e-6)
        assert abs(_dual_objective(sol, A, senses, rhs, lb, ub, c) - sol.objective) <= 1e-6


def test_warm_start_matches_cold():
    rng = np.random.default_rng(11)
    for _ in range(40):
        c, A, senses, rhs, lb, ub = _random_lp(rng, 6, 7)
        ub = np.where(np.isinf(ub), 8.0, ub)
        first = solve_lp(c, A, senses, rhs, lb, ub)
        if first.status != "optimal":
            continue
        j = int(rng.integers(0, 7))
        lb2, ub2 = lb.copy(), ub.copy()
        ub2[j] = math.floor(first.x[j])
        if ub2[j] < lb2[j]:
            continue
        warm = solve_lp(c, A, senses, rhs, lb2, ub2, warm=first.basis)
        cold = solve_lp(c, A, senses, rhs, lb2, ub2)
        assert warm.status == cold.status
        if cold.status == "optimal":
            assert warm.objective == pytest.approx(cold.objective, abs=1e-7)


# -- MILP against enumeration -----------------------------------------------------


def _random_milp(rng, n_int, n_cont, m):
    model = MilpModel()
    ints = [model.add_variable(rng.choice(["binary", "integer"]), 0, int(rng.integers(1, 3)), f"i{k}")
            for k in range(n_int)]
    conts = [model.add_variable("continuous", 0, float(rng.uniform(1, 5)), f"c{k}") for k in range(n_cont)]
    allv = ints + conts
    for k in range(m):
        terms = [(v, float(rng.integers(-4, 6))) for v in allv if rng.random() < 0.6]
        model.add_constraint(terms, rng.choice(["<=", ">="], p=[0.8, 0.2]), float(rng.uniform(-1, 8)), f"r{k}")
    model.set_objective([(v, float(rng.integers(-6, 4))) for v in allv], float(rng.uniform(-1, 1)))
    return model


def _enumerate(model):
    arr = model.to_arrays()
    ints = np.nonzero(arr.integer)[0]
    cont = np.nonzero(~arr.integer)[0]
    best = math.inf
    ranges = [range(int(arr.lb[i]), int(arr.ub[i]) + 1) for i in ints]
    sign = np.array([1.0 if s is Sense.LE else -1.0 for s in arr.senses])
    for combo in itertools.product(*ranges):
        xi = np.array(combo, dtype=float)
        rhs = sign * (arr.rhs - arr.A[:, ints] @ xi)
        if len(cont) == 0:
            if np.all(rhs >= -1e-9):
                best = min(best, arr.c[ints] @ xi + arr.constant)
            continue
        A = sign[:, None] * arr.A[:, cont]
        res = linprog(arr.c[cont], A_ub=A, b_ub=rhs, bounds=list(zip(arr.lb[cont], arr.ub[cont])), method="highs")
        if res.status == 0:
            best = min(best, res.fun + arr.c[ints] @ xi + arr.constant)
    return best


@pytest.mark.parametrize("seed", range(40))
def test_branch_and_bound_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    model = _random_milp(rng, int(rng.integers(2, 9)), int(rng.integers(0, 4)), int(rng.integers(2, 6)))
    ref = _enumerate(model)
    r = solve(model, SolveOptions(relative_gap=0))
    if math.isinf(ref):
        assert r.status is Status.INFEASIBLE
        return
    assert r.status is Status.OPTIMAL
    assert r.objective == pytest.approx(ref, abs=1e-6)
    assert model.violations(r.x) == []
    assert r.gap <= 1e-12 or r.gap == 0


def test_twelve_integers_against_enumeration():
    rng = np.random.default_rng(99)
    model = _random_milp(rng, 12, 2, 5)
    for v in model.integer_ids():
        model.set_bounds(v, 0, 1)
    assert solve(model, SolveOptions(relative_gap=0)).objective == pytest.approx(_enumerate(model), abs=1e-6)


def test_gap_contract_and_limits():
    rng = np.random.default_rng(5)
    model = _random_milp(rng, 12, 3, 6)
    r = solve(model, SolveOptions(relative_gap=0.05))
    assert r.status is Status.OPTIMAL
    assert (r.objective - r.best_bound) / max(abs(r.objective), 1e-10) <= 0.05 + 1e-12
    limited = solve(model, SolveOptions(relative_gap=0, node_limit=1))
    assert limited.status in (Status.LIMIT, Status.OPTIMAL)
    if limited.status is Status.LIMIT and limited.has_solution:
        assert limited.gap >= 0 and model.violations(limited.x) == []


def test_determinism():
    rng = np.random.default_rng(8)
    model = _random_milp(rng, 10, 3, 6)
    a = solve(model, SolveOptions(relative_gap=0, deterministic_seed=3))
    b = solve(model, SolveOptions(relative_gap=0, deterministic_seed=3))
    assert a.objective == b.objective and a.nodes == b.nodes and np.array_equal(a.x, b.x)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_scipy_milp_never_strictly_better(seed):
    rng = np.random.default_rng(seed)
    model = _random_milp(rng, 6, 2, 4)
    arr = model.to_arrays()
    lo = np.where([s is Sense.LE for s in arr.senses], -np.inf, arr.rhs)
    hi = np.where([s is Sense.GE for s in arr.senses], np.inf, arr.rhs)
    ref = milp(arr.c, constraints=LinearConstraint(arr.A, lo, hi), integrality=arr.integer.astype(int),
               bounds=Bounds(arr.lb, arr.ub), options={"mip_rel_gap": 0})
    r = solve(model, SolveOptions(relative_gap=0))
    if ref.status == 0:
        assert r.status is Status.OPTIMAL
        assert r.objective <= ref.fun + arr.constant + 1e-6
        assert model.violations(r.x) == []


# -- export ------------------------------------------------------------------------------


def _one_var():
    m = MilpModel("tiny")
    x = m.add_variable("continuous", 0, math.inf, "x")
    m.add_constraint([(x, 1)], "<=", 3, "cap")
    m.set_objective([(x, -1)])
    return m


def test_lp_text_one_variable():
    assert to_lp(_one_var()) == (
        "\\ Problem name: tiny\nMinimize\n obj: - 1.0 x\nSubject To\n cap: + 1.0 x <= 3.0\nBounds\nEnd\n"
    )


def test_mps_text_one_variable():
    assert to_mps(_one_var()) == (
        "NAME tiny\nROWS\n N obj\n L cap\nCOLUMNS\n x obj -1.0\n x cap 1.0\nRHS\n RHS cap 3.0\nBOUNDS\nENDATA\n"
    )


def test_empty_objective_exports_zero_constant():
    m = MilpModel()
    x = m.add_variable("continuous", 0, 1, "x")
    m.add_constraint([(x, 1)], "<=", 1)
    assert " obj: + 0" in to_lp(m)


def test_name_mapping_injective():
    names = ["a b", "a_b", "a-b", "1x", "e5", "ok"] + [f"v[{k}]" for k in range(10_000)]
    safe = safe_names(names)
    assert len(set(safe)) == len(names)
    assert safe[3].startswith("_") and safe[4].startswith("_")


def test_large_model_exports_without_collisions(tmp_path):
    m = MilpModel()
    ids = [m.add_variable("continuous", 0, 1, f"x {k}") for k in range(10_000)]
    m.add_constraint([(v, 1.0) for v in ids], "<=", 10, "sum")
    text = to_lp(m)
    bounds = text.split("Bounds\n")[1].split("End")[0].splitlines()
    assert len({b.split()[2] for b in bounds}) == 10_000


@pytest.mark.parametrize("fmt", ["lp", "mps"])
@pytest.mark.parametrize("seed", range(6))
def test_export_reimports_in_highs(tmp_path, fmt, seed):
    rng = np.random.default_rng(seed)
    model = _random_milp(rng, 5, 3, 4)
    ours = solve(model, SolveOptions(relative_gap=0))
    path = export_model(model, tmp_path / f"m.{fmt}")
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 0.0)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    lp = h.getLp()
    assert lp.num_col_ == model.num_variables and lp.num_row_ == model.num_constraints
    if ours.status is Status.OPTIMAL:
        assert h.getInfo().objective_function_value == pytest.approx(ours.objective, abs=1e-6)
    else:
        assert h.getModelStatus() == highspy.HighsModelStatus.kInfeasible


def test_unknown_export_format(tmp_path):
    with pytest.raises(ValueError):
        export_model(_one_var(), tmp_path / "m.txt")
