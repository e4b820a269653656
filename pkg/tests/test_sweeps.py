import datetime as dt
import math

import numpy as np
import pytest

from pspsplan import (
    CaseResult,
    DemandSeries,
    RiskTable,
    SolarProfile,
    SolveOptions,
    SweepGrid,
    SweepInputs,
    budget_breakdown,
    run_sweep,
    tradeoff_curve,
)
from pspsplan.formulations import PlanSolution
from pspsplan.sweeps import SWEEP_COLUMNS, run_case, write_breakdown_csv, write_plans, write_sweep_csv, write_tradeoff_csv

from cases import four_bus_instance


def test_grid_sizes():
    assert len(SweepGrid()) == 190
    grid = SweepGrid(scenarios=range(1, 9), budgets=(100,), alphas=(0.5,))
    assert len(grid) == 8 and [c[0] for c in grid.cases()] == list(range(1, 9))
    assert SweepGrid(budgets=(300, 100, 100), alphas=(0.5,)).budgets == (100.0, 300.0)


@pytest.mark.parametrize(
    "kw",
    [{"alphas": ()}, {"budgets": ()}, {"scenarios": (9,)}, {"alphas": (1.0,)}, {"budgets": (0,)}],
)
def test_grid_rejects(kw):
    with pytest.raises(ValueError):
        SweepGrid(**kw)


def _case(scenario=1, budget=100.0, alpha=0.5, **spend):
    return CaseResult(scenario, budget, alpha, "optimal_within_gap", spend={"battery": 0.0, "solar": 0.0,
                                                                          "hardening": 0.0, **spend})


def test_breakdown_examples():
    assert budget_breakdown(_case(battery=20.0)) == {"battery": 20.0, "solar": 0.0, "hardening": 0.0}
    assert sum(budget_breakdown(_case()).values()) == 0.0
    mixed = budget_breakdown(_case(budget=200.0, battery=100.0, solar=0.94, hardening=50.0))
    assert mixed == pytest.approx({"battery": 50.0, "solar": 0.47, "hardening": 25.0})


def test_tradeoff_orders_by_alpha():
    curve = tradeoff_curve([_case(alpha=0.7), _case(alpha=0.2), _case(alpha=0.5)])
    assert [p.alpha for p in curve] == [0.2, 0.5, 0.7]


def test_tradeoff_rejects_mixed_and_empty():
    with pytest.raises(ValueError, match="single"):
        tradeoff_curve([_case(budget=100.0), _case(budget=200.0)])
    with pytest.raises(ValueError):
        tradeoff_curve([])


@pytest.fixture(scope="module")
def inputs():
    net, risk, demand, solar = four_bus_instance()
    # six afternoon hours keep the exact solves quick
    demand = DemandSeries(demand.values[:, 12:18])
    solar = SolarProfile(solar.values[:, 12:18])
    rng = np.random.default_rng(5)
    dates = tuple(dt.date(2021, 7, 1) + dt.timedelta(days=k) for k in range(4))
    table = RiskTable(net.line_ids, dates, risk[:, None] * rng.uniform(0.5, 1.5, (1, 4)))
    return SweepInputs(
        net, risk, demand, solar,
        season_table=table,
        season_demands={d: demand for d in dates},
        threshold=float(np.median(table.daily_total)),
        options=SolveOptions(relative_gap=0.0),
        battery_buses=(3,), solar_buses=(3,),
    )


@pytest.fixture(scope="module")
def results(inputs):
    return run_sweep(inputs, SweepGrid(scenarios=(1, 7), budgets=(20.0, 60.0), alphas=(0.3, 0.7)))


def test_sweep_results(results):
    assert [r.key for r in results] == [(s, b, a) for s in (1, 7) for b in (20.0, 60.0) for a in (0.3, 0.7)]
    for r in results:
        assert r.error is None, r.error
        assert r.psps_days == 2 and r.failed_days == 0
        # hardening and storage never add risk above the pre-investment level
        assert 0 <= r.simulated_risk <= 1 + 1e-9
        assert 0 <= r.simulated_shed <= 1 + 1e-9
        assert sum(budget_breakdown(r).values()) <= 100 + 1e-9


def test_bigger_budget_never_hurts(results):
    by_key = {r.key: r.objective for r in results}
    for s in (1, 7):
        for a in (0.3, 0.7):
            assert by_key[(s, 60.0, a)] <= by_key[(s, 20.0, a)] + 1e-9


def test_parallel_matches_serial(inputs, results):
    grid = SweepGrid(scenarios=(1, 7), budgets=(20.0, 60.0), alphas=(0.3, 0.7))
    again = run_sweep(inputs, grid, workers=2)
    assert [(r.key, r.objective, r.simulated_risk) for r in again] == [
        (r.key, r.objective, r.simulated_risk) for r in results
    ]


def test_bad_case_reports_error(inputs):
    res = run_case(inputs, 1, 20.0, 1.5)
    assert res.status == "error" and "alpha" in res.error
    assert math.isnan(res.objective)


def test_output_files(tmp_path, inputs, results):
    write_sweep_csv(results, tmp_path / "sweep.csv")
    write_tradeoff_csv(results, tmp_path / "tradeoff.csv")
    write_breakdown_csv(results, tmp_path / "breakdown.csv")
    write_plans(results, inputs.network, tmp_path / "plans")
    sweep = (tmp_path / "sweep.csv").read_text().splitlines()
    assert sweep[0] == "# pspsplan sweep v1" and sweep[1].split(",") == list(SWEEP_COLUMNS)
    assert len(sweep) == 2 + len(results)
    trade = (tmp_path / "tradeoff.csv").read_text().splitlines()
    assert trade[0] == "# pspsplan tradeoff v1" and len(trade) == 2 + len(results)
    brk = (tmp_path / "breakdown.csv").read_text().splitlines()
    assert brk[1] == "scenario,budget,alpha,battery_pct,solar_pct,hardening_pct,total_pct"
    assert len(list((tmp_path / "plans").glob("*.json"))) == len(results)


def test_case_counts_from_plan(two_bus):
    plan = PlanSolution(np.array([0, 2]), np.array([3.5, 0.0]), np.ones(1, dtype=int))
    r = _case()
    r.plan = plan
    assert (r.batteries, r.solar_units, r.hardened_lines) == (2, 3.5, 1)
