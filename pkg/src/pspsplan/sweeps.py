"""Scenario x budget x alpha sweeps: plan, replay the season, tabulate."""

from __future__ import annotations

import datetime as dt
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .formulations import SOC_GAMMA, DecodeError, PlanSolution, build_invest, decode, save_plan
from .investments import SCENARIOS, catalog_for_scenario
from .milp import SolveOptions, solve
from .network import DemandSeries, Network, SolarProfile
from .risk import RiskTable
from .season import simulate_season

CSV_VERSION = 1
DEFAULT_BUDGETS = tuple(float(b) for b in range(100, 1001, 100))
DEFAULT_ALPHAS = tuple(round(0.05 * k, 2) for k in range(1, 20))
CATEGORIES = ("battery", "solar", "hardening")


@dataclass(frozen=True)
class SweepGrid:
    scenarios: tuple[int, ...] = (1,)
    budgets: tuple[float, ...] = DEFAULT_BUDGETS
    alphas: tuple[float, ...] = DEFAULT_ALPHAS

    def __post_init__(self):
        sc = tuple(sorted(set(int(s) for s in self.scenarios)))
        bu = tuple(sorted(set(float(b) for b in self.budgets)))
        al = tuple(sorted(set(float(a) for a in self.alphas)))
        if not sc or not bu or not al:
            raise ValueError("sweep grid needs at least one scenario, budget and alpha")
        if any(s not in SCENARIOS for s in sc):
            raise ValueError(f"scenarios must be in 1..8, got {sc}")
        if any(b <= 0 for b in bu):
            raise ValueError("budgets must be > 0")
        if any(not 0 < a < 1 for a in al):
            raise ValueError("alphas must lie strictly between 0 and 1")
        object.__setattr__(self, "scenarios", sc)
        object.__setattr__(self, "budgets", bu)
        object.__setattr__(self, "alphas", al)

    def cases(self) -> list[tuple[int, float, float]]:
        return list(itertools.product(self.scenarios, self.budgets, self.alphas))

    def __len__(self) -> int:
        return len(self.scenarios) * len(self.budgets) * len(self.alphas)


@dataclass(frozen=True)
class SweepInputs:
    """Everything a case needs.  Season fields may be omitted to skip replay."""

    network: Network
    planning_risk: np.ndarray
    planning_demand: DemandSeries
    solar: SolarProfile | None = None
    season_table: RiskTable | None = None
    season_demands: Mapping[dt.date, DemandSeries | Sequence[float]] | None = None
    threshold: float | None = None
    gamma: float = SOC_GAMMA
    options: SolveOptions = field(default_factory=SolveOptions)
    battery_buses: tuple[int, ...] | None = None
    solar_buses: tuple[int, ...] | None = None
    harden_lines: tuple[int, ...] | None = None
    switchable: tuple[int, ...] | None = None

    @property
    def replays(self) -> bool:
        return self.season_table is not None and self.threshold is not None


@dataclass
class CaseResult:
    scenario: int
    budget: float
    alpha: float
    status: str
    gap: float = math.nan
    nodes: int = 0
    wall_time: float = 0.0
    objective: float = math.nan
    predicted_shed: float = math.nan
    predicted_risk: float = math.nan
    plan: PlanSolution | None = None
    spend: dict[str, float] = field(default_factory=lambda: dict.fromkeys(CATEGORIES, 0.0))
    simulated_shed: float = math.nan
    simulated_risk: float = math.nan
    psps_days: int = 0
    failed_days: int = 0
    error: str | None = None

    @property
    def key(self) -> tuple[int, float, float]:
        return (self.scenario, self.budget, self.alpha)

    @property
    def batteries(self) -> int:
        return int(self.plan.x.sum()) if self.plan is not None else 0

    @property
    def solar_units(self) -> float:
        return float(self.plan.a.sum()) if self.plan is not None else 0.0

    @property
    def hardened_lines(self) -> int:
        return int(self.plan.y.sum()) if self.plan is not None else 0


def run_case(inputs: SweepInputs, scenario: int, budget: float, alpha: float) -> CaseResult:
    """Plan one case and, when season data is present, replay it."""
    start = time.monotonic()
    res = CaseResult(scenario, budget, alpha, "error")
    try:
        net = inputs.network
        cat = catalog_for_scenario(
            net, scenario, budget, inputs.battery_buses, inputs.solar_buses, inputs.harden_lines
        )
        form = build_invest(net, inputs.planning_risk, inputs.planning_demand, alpha, cat,
                            inputs.solar, inputs.switchable)
        sol = solve(form.model, inputs.options)
        res.status = sol.status.value
        res.gap = sol.gap
        res.nodes = sol.nodes
        dispatch, plan = decode(form, sol)
        res.plan = plan
        res.objective = dispatch.objective
        res.predicted_shed = dispatch.shed_fraction
        res.predicted_risk = dispatch.risk_fraction
        res.spend = dict(plan.spent)
        if inputs.replays:
            season = simulate_season(
                net, plan, inputs.season_table, inputs.season_demands or {}, alpha, inputs.threshold,
                inputs.gamma, inputs.solar, inputs.options, inputs.switchable,
            )
            res.simulated_shed = season.shed_fraction
            res.simulated_risk = season.risk_fraction
            res.psps_days = len(season.psps_records)
            res.failed_days = len(season.failed)
    except DecodeError as exc:
        res.error = str(exc)
    except (ValueError, KeyError) as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    res.wall_time = time.monotonic() - start
    return res


def _run_packed(args):
    return run_case(*args)


def run_sweep(inputs: SweepInputs, grid: SweepGrid, workers: int = 1) -> list[CaseResult]:
    """All cases of ``grid`` ordered by (scenario, budget, alpha)."""
    jobs = [(inputs, s, b, a) for s, b, a in grid.cases()]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_packed(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order whatever the completion order
        return list(pool.map(_run_packed, jobs))


@dataclass(frozen=True)
class TradeoffPoint:
    alpha: float
    predicted_shed: float
    predicted_risk: float
    simulated_shed: float
    simulated_risk: float


def tradeoff_curve(results: Sequence[CaseResult]) -> list[TradeoffPoint]:
    """Points of one (scenario, budget) pair sorted by alpha.

    Predicted fractions are normalised by the planning day's demand and risk;
    simulated ones by demand and pre-investment risk summed over PSPS days.
    """
    if not results:
        raise ValueError("no cases to build a trade-off curve from")
    pairs = {(r.scenario, r.budget) for r in results}
    if len(pairs) > 1:
        raise ValueError(f"trade-off curve needs a single scenario and budget, got {sorted(pairs)}")
    return [
        TradeoffPoint(r.alpha, r.predicted_shed, r.predicted_risk, r.simulated_shed, r.simulated_risk)
        for r in sorted(results, key=lambda r: r.alpha)
    ]


def budget_breakdown(case: CaseResult) -> dict[str, float]:
    """Percent of the budget spent per investment type."""
    return {k: 100.0 * case.spend.get(k, 0.0) / case.budget for k in CATEGORIES}


# -- output files ---------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.9g}"
    return str(v)


def _write(path: str | Path, kind: str, columns: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# pspsplan {kind} v{CSV_VERSION}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


SWEEP_COLUMNS = (
    "scenario", "budget", "alpha", "status", "gap", "nodes", "objective",
    "predicted_shed", "predicted_risk", "simulated_shed", "simulated_risk",
    "psps_days", "failed_days", "batteries", "solar_units", "hardened_lines",
    "spend_battery", "spend_solar", "spend_hardening", "error",
)


def write_sweep_csv(results: Sequence[CaseResult], path: str | Path) -> None:
    # wall time is left out on purpose: it would break byte-identical reruns
    rows = (
        (r.scenario, r.budget, r.alpha, r.status, r.gap, r.nodes, r.objective,
         r.predicted_shed, r.predicted_risk, r.simulated_shed, r.simulated_risk,
         r.psps_days, r.failed_days, r.batteries, r.solar_units, r.hardened_lines,
         r.spend.get("battery", 0.0), r.spend.get("solar", 0.0), r.spend.get("hardening", 0.0),
         (r.error or "").replace(",", ";").replace("\n", " "))
        for r in results
    )
    _write(path, "sweep", SWEEP_COLUMNS, rows)


def write_tradeoff_csv(results: Sequence[CaseResult], path: str | Path) -> None:
    groups: dict[tuple[int, float], list[CaseResult]] = {}
    for r in results:
        groups.setdefault((r.scenario, r.budget), []).append(r)
    rows = []
    for (s, b) in sorted(groups):
        for p in tradeoff_curve(groups[(s, b)]):
            rows.append((s, b, p.alpha, p.predicted_shed, p.predicted_risk, p.simulated_shed, p.simulated_risk))
    _write(path, "tradeoff",
           ("scenario", "budget", "alpha", "predicted_shed", "predicted_risk", "simulated_shed", "simulated_risk"),
           rows)


def write_breakdown_csv(results: Sequence[CaseResult], path: str | Path) -> None:
    rows = []
    for r in results:
        pct = budget_breakdown(r)
        rows.append((r.scenario, r.budget, r.alpha, pct["battery"], pct["solar"], pct["hardening"],
                     sum(pct.values())))
    _write(path, "breakdown",
           ("scenario", "budget", "alpha", "battery_pct", "solar_pct", "hardening_pct", "total_pct"), rows)


def write_plans(results: Sequence[CaseResult], network: Network, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for r in results:
        if r.plan is not None:
            save_plan(r.plan, network, directory / f"plan_s{r.scenario}_b{r.budget:g}_a{r.alpha:g}.json")
