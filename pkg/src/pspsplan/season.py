"""Day-by-day replay of a fire season with a fixed investment plan."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .formulations import SOC_GAMMA, DecodeError, DispatchSolution, PlanSolution, build_seq, decode
from .milp import SolveOptions, Status, solve
from .network import BASE_MVA, DemandSeries, Network, SolarProfile, apply_profile
from .risk import RiskTable, psps_days

SEASON_CSV_VERSION = 1
SEASON_COLUMNS = (
    "date",
    "psps",
    "status",
    "baseline_risk",
    "remaining_risk",
    "remaining_over_threshold",
    "demand_mwh",
    "shed_mwh",
    "shed_fraction",
    "initial_soc",
    "final_soc",
    "gap",
    "objective",
)


@dataclass
class DayRecord:
    date: dt.date
    was_psps: bool
    baseline_risk: float
    remaining_risk: float
    demand: float  # sheddable demand over the day, p.u. x hours
    shed: float  # p.u. x hours
    initial_soc: np.ndarray
    final_soc: np.ndarray
    status: str = "not_dispatched"
    gap: float = 0.0
    objective: float = math.nan
    dispatch: DispatchSolution | None = None

    @property
    def shed_mwh(self) -> float:
        return self.shed * BASE_MVA

    @property
    def shed_fraction(self) -> float:
        return self.shed / self.demand if self.demand > 0 else 0.0

    @property
    def solved(self) -> bool:
        return self.status in (Status.OPTIMAL.value, Status.LIMIT.value)


@dataclass
class SeasonResult:
    days: list[DayRecord]
    threshold: float
    alpha: float
    gamma: float
    plan: PlanSolution | None = None

    @property
    def psps_records(self) -> list[DayRecord]:
        return [d for d in self.days if d.was_psps]

    @property
    def failed(self) -> list[DayRecord]:
        return [d for d in self.psps_records if not d.solved]

    def _solved_psps(self):
        return [d for d in self.psps_records if d.solved]

    @property
    def shed_fraction(self) -> float:
        """Shed over served-plus-shed demand, summed over solved PSPS days."""
        recs = self._solved_psps()
        demand = sum(d.demand for d in recs)
        return sum(d.shed for d in recs) / demand if demand > 0 else 0.0

    @property
    def risk_fraction(self) -> float:
        """Remaining over pre-investment risk, summed over solved PSPS days."""
        recs = self._solved_psps()
        base = sum(d.baseline_risk for d in recs)
        return sum(d.remaining_risk for d in recs) / base if base > 0 else 0.0

    @property
    def total_shed_mwh(self) -> float:
        return float(sum(d.shed_mwh for d in self.days))

    def to_csv(self, path: str | Path, network: Network | None = None) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# pspsplan season v{SEASON_CSV_VERSION} threshold={self.threshold:.9g} "
                     f"alpha={self.alpha:.9g} gamma={self.gamma:.9g}\n")
            fh.write(",".join(SEASON_COLUMNS) + "\n")
            for d in self.days:
                row = (
                    d.date.isoformat(),
                    str(int(d.was_psps)),
                    d.status,
                    f"{d.baseline_risk:.9g}",
                    f"{d.remaining_risk:.9g}",
                    f"{d.remaining_risk / self.threshold:.9g}" if self.threshold > 0 else "nan",
                    f"{d.demand * BASE_MVA:.9g}",
                    f"{d.shed_mwh:.9g}",
                    f"{d.shed_fraction:.9g}",
                    ";".join(f"{v:.9g}" for v in d.initial_soc),
                    ";".join(f"{v:.9g}" for v in d.final_soc),
                    f"{d.gap:.6g}",
                    f"{d.objective:.12g}",
                )
                fh.write(",".join(row) + "\n")


def _day_demand(network: Network, demands, date: dt.date) -> DemandSeries:
    try:
        value = demands[date]
    except KeyError:
        raise KeyError(f"no demand profile for {date}") from None
    if isinstance(value, DemandSeries):
        return value
    value = np.asarray(value, dtype=float)
    return apply_profile(network, value, date.isoformat(), hours=len(value))


def _aligned(table: RiskTable, network: Network) -> np.ndarray:
    if table.line_ids == network.line_ids:
        return table.r
    pos = {lid: i for i, lid in enumerate(table.line_ids)}
    missing = [lid for lid in network.line_ids if lid not in pos]
    if missing:
        raise ValueError(f"risk table lacks lines {missing}")
    return table.r[[pos[lid] for lid in network.line_ids]]


def simulate_season(
    network: Network,
    plan: PlanSolution,
    risk_table: RiskTable,
    demands: Mapping[dt.date, DemandSeries | Sequence[float]],
    alpha: float,
    threshold: float,
    gamma: float = SOC_GAMMA,
    solar: SolarProfile | None = None,
    options: SolveOptions | None = None,
    switchable: Sequence[int] | None = None,
    keep_dispatch: bool = False,
) -> SeasonResult:
    """Replay every day of ``risk_table`` in date order.

    A day triggers when its pre-investment total risk reaches ``threshold``.
    Triggered days are dispatched with the plan fixed; batteries start full
    unless the previous calendar day was also dispatched successfully, in
    which case they start where that day ended.  ``demands`` maps each
    triggered date to a demand series or an hourly scaling vector.
    """
    options = options or SolveOptions()
    r = _aligned(risk_table, network)
    beta = plan.beta
    y = np.asarray(plan.y, dtype=float)
    full = np.asarray(plan.x, dtype=float) * plan.battery.initial_charge
    triggered = {p.index: p for p in psps_days(risk_table, threshold)}

    records: list[DayRecord] = []
    carry: np.ndarray | None = None
    for j, date in enumerate(risk_table.dates):
        r_day = r[:, j]
        baseline = float(r_day.sum())
        if j not in triggered:
            records.append(
                DayRecord(date, False, baseline, float(np.sum(r_day * (1 - beta * y))), 0.0, 0.0, full.copy(), full.copy())
            )
            carry = None
            continue

        soc0 = carry if (triggered[j].follows_psps and carry is not None) else full.copy()
        demand = _day_demand(network, demands, date)
        form = build_seq(network, r_day, demand, alpha, plan, soc0, gamma, solar, switchable)
        result = solve(form.model, options)
        rec = DayRecord(date, True, baseline, math.nan, form.D, math.nan, soc0.copy(), soc0.copy(),
                        result.status.value, result.gap, result.objective)
        try:
            dispatch, _ = decode(form, result)
        except DecodeError:
            # a failed day breaks the chain; the next PSPS day starts full
            records.append(rec)
            carry = None
            continue
        rec.remaining_risk = float(np.sum(r_day * dispatch.z * (1 - beta * y)))
        rec.shed = dispatch.shed
        rec.final_soc = dispatch.final_soc.copy()
        rec.objective = dispatch.objective
        if keep_dispatch:
            rec.dispatch = dispatch
        records.append(rec)
        carry = rec.final_soc
    return SeasonResult(records, threshold, alpha, gamma, plan)
