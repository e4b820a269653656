import datetime as dt

import numpy as np
import pytest

import pspsplan.season
from pspsplan import Hardening, PlanSolution, RiskTable, SolveOptions, SolveResult, Status, simulate_season
from pspsplan.season import SEASON_COLUMNS

EXACT = SolveOptions(relative_gap=0.0)
START = dt.date(2021, 6, 1)
OK = Status.OPTIMAL.value


def table(values):
    dates = tuple(START + dt.timedelta(days=k) for k in range(len(values)))
    return RiskTable(("L",), dates, np.array([values], dtype=float))


def flat(t):
    return {d: np.ones(24) for d in t.dates}


def battery_plan(n=3):
    return PlanSolution(np.array([0, n]), np.zeros(2), np.zeros(1, dtype=int), budget=20.0 * n)


def replay(net, plan, t, threshold=50.0, alpha=0.5, **kw):
    return simulate_season(net, plan, t, flat(t), alpha, threshold, options=EXACT, **kw)


def test_only_days_at_or_above_threshold_dispatch(two_bus):
    season = replay(two_bus, PlanSolution.empty(two_bus), table([10, 80, 10, 50]))
    assert [d.was_psps for d in season.days] == [False, True, False, True]
    assert [d.status for d in season.days] == ["not_dispatched", OK, "not_dispatched", OK]
    quiet = season.days[0]
    assert quiet.shed == 0.0 and quiet.remaining_risk == quiet.baseline_risk == 10.0


def test_no_trigger_no_shed(two_bus):
    season = replay(two_bus, PlanSolution.empty(two_bus), table([10, 80, 10]), threshold=1e9)
    assert season.psps_records == [] and season.total_shed_mwh == 0.0
    assert season.shed_fraction == 0.0


def test_consecutive_days_chain_storage(two_bus):
    season = replay(two_bus, battery_plan(), table([90, 90, 90]), alpha=0.3, gamma=0.0)
    d1, d2, d3 = season.days
    assert np.array_equal(d1.initial_soc, [0.0, 3.0])
    assert np.array_equal(d2.initial_soc, d1.final_soc)
    assert np.array_equal(d3.initial_soc, d2.final_soc)
    # each day drains some storage to cover the isolated bus
    assert d1.final_soc[1] < 3.0 and d2.final_soc[1] <= d1.final_soc[1]


def test_quiet_day_resets_storage(two_bus):
    season = replay(two_bus, battery_plan(), table([90, 10, 90]), alpha=0.3)
    assert np.array_equal(season.days[2].initial_soc, [0.0, 3.0])


def test_full_underground_leaves_no_risk(two_bus):
    plan = PlanSolution(np.zeros(2, dtype=int), np.zeros(2), np.ones(1, dtype=int), hardening=Hardening.UNDERGROUND)
    season = replay(two_bus, plan, table([10, 80, 90]))
    assert all(d.remaining_risk == 0.0 for d in season.days)
    assert season.risk_fraction == 0.0 and season.shed_fraction == 0.0


def test_shed_bounded_by_demand_and_risk_by_baseline(four_bus_season):
    season = four_bus_season
    for d in season.psps_records:
        assert 0 <= d.shed <= d.demand + 1e-9
        assert d.remaining_risk <= d.baseline_risk + 1e-9
    assert 0 <= season.shed_fraction <= 1 and 0 <= season.risk_fraction <= 1


@pytest.fixture
def four_bus_season():
    from pspsplan.synthetic import four_bus

    net = four_bus()
    rng = np.random.default_rng(3)
    dates = tuple(START + dt.timedelta(days=k) for k in range(5))
    t = RiskTable(net.line_ids, dates, rng.uniform(0, 100, (net.n_lines, 5)))
    return simulate_season(net, PlanSolution.empty(net), t, flat(t), 0.4, float(np.median(t.daily_total)), options=EXACT)


def test_failed_day_breaks_chain(two_bus, monkeypatch):
    real = pspsplan.season.solve
    calls = []

    def flaky(model, options):
        calls.append(model)
        return SolveResult(Status.INFEASIBLE) if len(calls) == 2 else real(model, options)

    monkeypatch.setattr(pspsplan.season, "solve", flaky)
    season = replay(two_bus, battery_plan(), table([90, 90, 90]), alpha=0.3)
    d1, d2, d3 = season.days
    assert d2.status == "infeasible" and not d2.solved
    assert season.failed == [d2]
    assert np.array_equal(d3.initial_soc, [0.0, 3.0])
    assert d1 in season.psps_records and d1.solved


def test_missing_demand_profile(two_bus):
    t = table([90])
    with pytest.raises(KeyError, match="2021-06-01"):
        simulate_season(two_bus, PlanSolution.empty(two_bus), t, {}, 0.5, 50.0)


def test_season_csv(tmp_path, two_bus):
    season = replay(two_bus, battery_plan(), table([10, 90]))
    path = tmp_path / "season.csv"
    season.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# pspsplan season v1 threshold=50")
    assert lines[1].split(",") == list(SEASON_COLUMNS)
    assert len(lines) == 4
    row = dict(zip(SEASON_COLUMNS, lines[3].split(",")))
    assert row["psps"] == "1" and row["status"] == OK and row["initial_soc"] == "0;3"
