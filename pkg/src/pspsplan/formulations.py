"""MILP builders for multi-period de-energisation, investment planning and
fixed-plan daily operation, plus solution decoding and feasibility audits.

All three problems share one DC power-flow core.  The switching decision of a
line is a single binary for the whole day; lines outside the switchable set
are always energised and use the unswitched constraint forms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .investments import BatterySpec, Hardening, InvestmentCatalog
from .milp import MilpModel, SolveResult, Status, VarKind
from .network import DemandSeries, Network, NormalizationError, SolarProfile, total_demand

AUDIT_TOL = 1e-6
SOC_GAMMA = 0.01


class DecodeError(RuntimeError):
    """The solver returned no usable assignment."""


def big_m_angles(network: Network) -> tuple[float, float]:
    """Big-M pair for the switched angle constraints: sums of all angle limits."""
    lo = float(sum(l.angle_min for l in network.lines))
    hi = float(sum(l.angle_max for l in network.lines))
    return lo, hi


@dataclass
class Formulation:
    """A built model plus the maps needed to read its solution.

    Index arrays hold model variable ids, ``-1`` where no variable exists.
    Investment decisions fixed by a plan live in ``fixed_x``/``fixed_a``/
    ``fixed_y``; ``soc_init`` is the known initial energy (fixed plans only).
    """

    kind: str
    model: MilpModel
    network: Network
    demand: DemandSeries
    risk: np.ndarray
    alpha: float
    D: float
    R: float
    switchable: np.ndarray
    pg: np.ndarray
    theta: np.ndarray
    ls: np.ndarray
    f: np.ndarray
    z: np.ndarray
    battery_buses: tuple[int, ...] = ()
    x: np.ndarray | None = None
    u: np.ndarray | None = None
    pc: np.ndarray | None = None
    pw: np.ndarray | None = None
    solar_buses: tuple[int, ...] = ()
    a: np.ndarray | None = None
    ps: np.ndarray | None = None
    harden_lines: tuple[int, ...] = ()
    y: np.ndarray | None = None
    catalog: InvestmentCatalog | None = None
    battery: BatterySpec = field(default_factory=BatterySpec)
    solar: SolarProfile | None = None
    beta: float = 0.0
    gamma: float = 0.0
    e_total: float = 0.0
    fixed_x: np.ndarray | None = None
    fixed_a: np.ndarray | None = None
    fixed_y: np.ndarray | None = None
    soc_init: np.ndarray | None = None

    @property
    def hours(self) -> int:
        return self.demand.hours


# -- shared core ----------------------------------------------------------------


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")


def _switch_mask(network: Network, switchable: Sequence[int] | None) -> np.ndarray:
    mask = np.zeros(network.n_lines, dtype=bool)
    if switchable is None:
        mask[[l.index for l in network.lines if l.switchable]] = True
    else:
        mask[list(switchable)] = True
    return mask


def _core(
    kind: str,
    network: Network,
    risk: Sequence[float],
    demand: DemandSeries,
    alpha: float,
    switchable: Sequence[int] | None,
) -> Formulation:
    _check_alpha(alpha)
    risk = np.asarray(getattr(risk, "r", risk), dtype=float)
    if risk.shape != (network.n_lines,):
        raise ValueError(f"risk vector has shape {risk.shape}, expected ({network.n_lines},)")
    if demand.values.shape[0] != network.n_buses:
        raise ValueError("demand series does not match the network's bus count")
    D = total_demand(demand)
    R = float(risk.sum())
    T = demand.hours
    N, L, G = network.n_buses, network.n_lines, network.n_generators
    sw = _switch_mask(network, switchable)
    m = MilpModel(kind)

    pg = np.empty((G, T), dtype=int)
    for g in network.generators:
        for t in range(T):
            pg[g.index, t] = m.add_variable("continuous", g.p_min, g.p_max, f"pg_{g.id}_{t}")
    theta = np.empty((N, T), dtype=int)
    ls = np.empty((N, T), dtype=int)
    shed_ub = demand.sheddable
    for b in network.buses:
        for t in range(T):
            # the lowest-index bus is the angle reference
            lo, hi = (0.0, 0.0) if b.index == 0 else (-math.inf, math.inf)
            theta[b.index, t] = m.add_variable("continuous", lo, hi, f"theta_{b.id}_{t}")
    for b in network.buses:
        for t in range(T):
            ls[b.index, t] = m.add_variable("continuous", 0.0, shed_ub[b.index, t], f"ls_{b.id}_{t}")
    f = np.empty((L, T), dtype=int)
    for l in network.lines:
        for t in range(T):
            f[l.index, t] = m.add_variable("continuous", -l.flow_limit, l.flow_limit, f"f_{l.id}_{t}")
    z = np.full(L, -1, dtype=int)
    for l in network.lines:
        if sw[l.index]:
            z[l.index] = m.add_variable("binary", 0, 1, f"z_{l.id}")

    m_lo, m_hi = big_m_angles(network)
    for l in network.lines:
        i, j, b = l.from_bus, l.to_bus, l.susceptance
        for t in range(T):
            ft, ti, tj = f[l.index, t], theta[i, t], theta[j, t]
            tag = f"{l.id}_{t}"
            if sw[l.index]:
                zl = z[l.index]
                m.add_constraint([(ft, 1), (zl, -l.flow_limit)], "<=", 0, f"fmax_{tag}")
                m.add_constraint([(ft, 1), (zl, l.flow_limit)], ">=", 0, f"fmin_{tag}")
                m.add_constraint([(ti, 1), (tj, -1), (zl, m_hi - l.angle_max)], "<=", m_hi, f"dmax_{tag}")
                m.add_constraint([(ti, 1), (tj, -1), (zl, m_lo - l.angle_min)], ">=", m_lo, f"dmin_{tag}")
                # f + b*(th_i - th_j) in [|b| M_lo (1-z), |b| M_hi (1-z)]
                ab = abs(b)
                m.add_constraint([(ft, 1), (ti, b), (tj, -b), (zl, ab * m_lo)], ">=", ab * m_lo, f"flo_{tag}")
                m.add_constraint([(ft, 1), (ti, b), (tj, -b), (zl, ab * m_hi)], "<=", ab * m_hi, f"fhi_{tag}")
            else:
                m.add_constraint([(ti, 1), (tj, -1)], "<=", l.angle_max, f"dmax_{tag}")
                m.add_constraint([(ti, 1), (tj, -1)], ">=", l.angle_min, f"dmin_{tag}")
                m.add_constraint([(ft, 1), (ti, b), (tj, -b)], "=", 0, f"flow_{tag}")

    return Formulation(
        kind=kind,
        model=m,
        network=network,
        demand=demand,
        risk=risk,
        alpha=alpha,
        D=D,
        R=R,
        switchable=sw,
        pg=pg,
        theta=theta,
        ls=ls,
        f=f,
        z=z,
    )


def _balance_rows(form: Formulation) -> None:
    """Nodal balance: flow out - flow in = gen - demand + shed - charge + discharge + solar."""
    net, m, T = form.network, form.model, form.hours
    out_lines: list[list[int]] = [[] for _ in range(net.n_buses)]
    in_lines: list[list[int]] = [[] for _ in range(net.n_buses)]
    for l in net.lines:
        out_lines[l.from_bus].append(l.index)
        in_lines[l.to_bus].append(l.index)
    gens: list[list[int]] = [[] for _ in range(net.n_buses)]
    for g in net.generators:
        gens[g.bus].append(g.index)
    bpos = {n: k for k, n in enumerate(form.battery_buses)}
    spos = {n: k for k, n in enumerate(form.solar_buses)}
    for b in net.buses:
        n = b.index
        for t in range(T):
            terms = [(form.f[l, t], 1.0) for l in out_lines[n]]
            terms += [(form.f[l, t], -1.0) for l in in_lines[n]]
            terms += [(form.pg[g, t], -1.0) for g in gens[n]]
            terms.append((form.ls[n, t], -1.0))
            if n in bpos and form.pc is not None:
                k = bpos[n]
                terms += [(form.pc[k, t], 1.0), (form.pw[k, t], -1.0)]
            if n in spos and form.ps is not None:
                terms.append((form.ps[spos[n], t], -1.0))
            m.add_constraint(terms, "=", -form.demand.values[n, t], f"bal_{b.id}_{t}")


def _risk_weight(form: Formulation) -> float:
    # with zero total risk the risk term vanishes identically
    return (1 - form.alpha) / form.R if form.R > 0 else 0.0


# -- builders -------------------------------------------------------------------


def build_mtp_psps(
    network: Network,
    risk,
    demand: DemandSeries,
    alpha: float,
    switchable: Sequence[int] | None = None,
) -> Formulation:
    """Multi-period de-energisation model for one day without investments."""
    form = _core("mtp_psps", network, risk, demand, alpha, switchable)
    _balance_rows(form)
    w_shed = alpha / form.D
    w_risk = _risk_weight(form)
    terms = [(int(v), w_shed) for v in form.ls.ravel()]
    const = 0.0
    for l in network.lines:
        if form.switchable[l.index]:
            terms.append((int(form.z[l.index]), w_risk * form.risk[l.index]))
        else:
            const += w_risk * form.risk[l.index]
    form.model.set_objective(terms, const)
    return form


def _add_battery_vars(form: Formulation, buses: tuple[int, ...], x_bounds: list[tuple[float, float]], integer_x: bool):
    m, T, net = form.model, form.hours, form.network
    k = len(buses)
    form.battery_buses = buses
    form.x = np.full(k, -1, dtype=int)
    form.u = np.full((k, T), -1, dtype=int)
    form.pc = np.empty((k, T), dtype=int)
    form.pw = np.empty((k, T), dtype=int)
    for idx, n in enumerate(buses):
        bid = net.buses[n].id
        if integer_x:
            form.x[idx] = m.add_variable("integer", x_bounds[idx][0], x_bounds[idx][1], f"x_{bid}")
        for t in range(T):
            form.u[idx, t] = m.add_variable("binary", 0, 1, f"u_{bid}_{t}")
        for t in range(T):
            form.pc[idx, t] = m.add_variable("continuous", 0.0, math.inf, f"pc_{bid}_{t}")
        for t in range(T):
            form.pw[idx, t] = m.add_variable("continuous", 0.0, math.inf, f"pw_{bid}_{t}")


def _soc_terms(form: Formulation, idx: int, t: int) -> list[tuple[int, float]]:
    """Terms of the energy change over hours 0..t (stored energy after hour t)."""
    e = form.battery.efficiency
    terms = []
    for tau in range(t + 1):
        terms.append((int(form.pc[idx, tau]), e))
        terms.append((int(form.pw[idx, tau]), -1.0 / e))
    return terms


def build_invest(
    network: Network,
    risk,
    demand: DemandSeries,
    alpha: float,
    catalog: InvestmentCatalog,
    solar: SolarProfile | None = None,
    switchable: Sequence[int] | None = None,
) -> Formulation:
    """Joint siting/sizing of batteries, solar and hardening with de-energisation."""
    catalog.validate(network)
    if catalog.solar_buses and solar is None:
        raise ValueError("solar candidates need a solar availability profile")
    form = _core("invest", network, risk, demand, alpha, switchable)
    form.catalog = catalog
    form.battery = catalog.battery
    form.solar = solar
    form.beta = catalog.beta
    m, T = form.model, form.hours
    bat = catalog.battery
    m_batt = catalog.max_batteries if catalog.battery_buses else 0

    if catalog.battery_buses:
        _add_battery_vars(form, catalog.battery_buses, [(0, m_batt)] * len(catalog.battery_buses), True)
        for idx, n in enumerate(catalog.battery_buses):
            bid = network.buses[n].id
            xv = int(form.x[idx])
            for t in range(T):
                soc = _soc_terms(form, idx, t)
                # x*E0 + sum(...) <= x*Emax  and  >= x*Emin
                m.add_constraint(soc + [(xv, bat.initial_charge - bat.e_max)], "<=", 0, f"socmax_{bid}_{t}")
                m.add_constraint(soc + [(xv, bat.initial_charge - bat.e_min)], ">=", 0, f"socmin_{bid}_{t}")
                pc, pw, u = int(form.pc[idx, t]), int(form.pw[idx, t]), int(form.u[idx, t])
                if bat.charge_min > 0:
                    m.add_constraint([(pc, 1), (u, -bat.charge_min)], ">=", 0, f"pcmin_{bid}_{t}")
                if bat.discharge_min > 0:
                    m.add_constraint([(pw, 1), (u, bat.discharge_min)], ">=", bat.discharge_min, f"pwmin_{bid}_{t}")
                m.add_constraint([(pc, 1), (u, -bat.charge_max * m_batt)], "<=", 0, f"pcu_{bid}_{t}")
                m.add_constraint([(pw, 1), (u, bat.discharge_max * m_batt)], "<=", bat.discharge_max * m_batt, f"pwu_{bid}_{t}")
                m.add_constraint([(pc, 1), (xv, -bat.charge_max)], "<=", 0, f"pcx_{bid}_{t}")
                m.add_constraint([(pw, 1), (xv, -bat.discharge_max)], "<=", 0, f"pwx_{bid}_{t}")

    if catalog.solar_buses:
        form.solar_buses = catalog.solar_buses
        k = len(catalog.solar_buses)
        form.a = np.empty(k, dtype=int)
        form.ps = np.empty((k, T), dtype=int)
        for idx, n in enumerate(catalog.solar_buses):
            bid = network.buses[n].id
            form.a[idx] = m.add_variable("continuous", 0.0, catalog.max_solar_units, f"a_{bid}")
            for t in range(T):
                form.ps[idx, t] = m.add_variable("continuous", 0.0, math.inf, f"ps_{bid}_{t}")
            for t in range(T):
                m.add_constraint(
                    [(int(form.ps[idx, t]), 1), (int(form.a[idx]), -solar.values[n, t])], "<=", 0, f"solar_{bid}_{t}"
                )

    if catalog.harden_lines:
        form.harden_lines = catalog.harden_lines
        form.y = np.empty(len(catalog.harden_lines), dtype=int)
        for idx, l in enumerate(catalog.harden_lines):
            lid = network.lines[l].id
            form.y[idx] = m.add_variable("binary", 0, 1, f"y_{lid}")
            if form.switchable[l]:
                # hardening a de-energised line is pointless: (1 - z) + y <= 1
                m.add_constraint([(int(form.y[idx]), 1), (int(form.z[l]), -1)], "<=", 0, f"hz_{lid}")

    _balance_rows(form)

    budget = []
    if form.x is not None:
        budget += [(int(v), bat.price) for v in form.x]
    if form.a is not None:
        budget += [(int(v), catalog.solar_price) for v in form.a]
    if form.y is not None:
        budget += [(int(v), catalog.harden_price * network.lines[l].length) for v, l in zip(form.y, form.harden_lines)]
    if budget:
        m.add_constraint(budget, "<=", catalog.budget, "budget")

    w_shed = alpha / form.D
    w_risk = _risk_weight(form)
    terms = [(int(v), w_shed) for v in form.ls.ravel()]
    const = 0.0
    for l in network.lines:
        if form.switchable[l.index]:
            terms.append((int(form.z[l.index]), w_risk * form.risk[l.index]))
        else:
            const += w_risk * form.risk[l.index]
    if form.y is not None:
        terms += [(int(v), -w_risk * catalog.beta * form.risk[l]) for v, l in zip(form.y, form.harden_lines)]
    m.set_objective(terms, const)
    return form


def build_seq(
    network: Network,
    risk,
    demand: DemandSeries,
    alpha: float,
    plan: "PlanSolution",
    initial_soc: Sequence[float] | None = None,
    gamma: float = SOC_GAMMA,
    solar: SolarProfile | None = None,
    switchable: Sequence[int] | None = None,
) -> Formulation:
    """One operating day with investments fixed by ``plan``.

    ``initial_soc`` gives stored energy per bus (length ``n_buses``); it
    defaults to full batteries.  The final-energy term is rewarded, i.e.
    entered with a negative sign in the minimised objective.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    form = _core("seq", network, risk, demand, alpha, switchable)
    bat = plan.battery
    form.battery = bat
    form.solar = solar
    form.beta = plan.beta
    form.gamma = gamma
    m, T = form.model, form.hours
    N = network.n_buses

    x_hat = np.asarray(plan.x, dtype=float)
    a_hat = np.asarray(plan.a, dtype=float)
    y_hat = np.asarray(plan.y, dtype=float)
    form.fixed_x, form.fixed_a, form.fixed_y = x_hat, a_hat, y_hat
    form.e_total = float(x_hat.sum() * bat.e_max)
    if initial_soc is None:
        initial_soc = x_hat * bat.initial_charge
    soc0 = np.asarray(initial_soc, dtype=float)
    if soc0.shape != (N,):
        raise ValueError("initial_soc needs one value per bus")
    if np.any(soc0 < x_hat * bat.e_min - AUDIT_TOL) or np.any(soc0 > x_hat * bat.e_max + AUDIT_TOL):
        raise ValueError("initial state of charge outside storage limits")
    form.soc_init = soc0

    # the hardening exclusion with y fixed: a hardened switchable line stays energised
    for l in np.nonzero(y_hat > 0)[0]:
        if form.switchable[l]:
            m.add_constraint([(int(form.z[l]), 1)], ">=", 1, f"hz_{network.lines[l].id}")

    buses = tuple(int(n) for n in np.nonzero(x_hat > 0)[0])
    if buses:
        _add_battery_vars(form, buses, [], False)
        for idx, n in enumerate(buses):
            bid = network.buses[n].id
            xn = x_hat[n]
            for t in range(T):
                pc, pw, u = int(form.pc[idx, t]), int(form.pw[idx, t]), int(form.u[idx, t])
                m.set_bounds(pc, 0.0, bat.charge_max * xn)
                m.set_bounds(pw, 0.0, bat.discharge_max * xn)
                soc = _soc_terms(form, idx, t)
                m.add_constraint(soc, "<=", xn * bat.e_max - form.soc_init[n], f"socmax_{bid}_{t}")
                m.add_constraint(soc, ">=", xn * bat.e_min - form.soc_init[n], f"socmin_{bid}_{t}")
                if bat.charge_min > 0:
                    m.add_constraint([(pc, 1), (u, -bat.charge_min)], ">=", 0, f"pcmin_{bid}_{t}")
                if bat.discharge_min > 0:
                    m.add_constraint([(pw, 1), (u, bat.discharge_min)], ">=", bat.discharge_min, f"pwmin_{bid}_{t}")
                m.add_constraint([(pc, 1), (u, -bat.charge_max * xn)], "<=", 0, f"pcu_{bid}_{t}")
                m.add_constraint([(pw, 1), (u, bat.discharge_max * xn)], "<=", bat.discharge_max * xn, f"pwu_{bid}_{t}")

    sbuses = tuple(int(n) for n in np.nonzero(a_hat > 0)[0])
    if sbuses:
        if solar is None:
            raise ValueError("plan has solar units but no solar availability profile was given")
        form.solar_buses = sbuses
        form.ps = np.empty((len(sbuses), T), dtype=int)
        for idx, n in enumerate(sbuses):
            for t in range(T):
                form.ps[idx, t] = m.add_variable(
                    "continuous", 0.0, solar.values[n, t] * a_hat[n], f"ps_{network.buses[n].id}_{t}"
                )

    _balance_rows(form)

    w_shed = alpha / form.D
    w_risk = _risk_weight(form)
    terms = [(int(v), w_shed) for v in form.ls.ravel()]
    const = 0.0
    for l in network.lines:
        r_eff = form.risk[l.index] * (1 - form.beta * y_hat[l.index])
        if form.switchable[l.index]:
            terms.append((int(form.z[l.index]), w_risk * r_eff))
        else:
            const += w_risk * r_eff
    if gamma > 0 and form.e_total > 0:
        w_soc = gamma / form.e_total
        e = bat.efficiency
        for idx, n in enumerate(buses):
            for t in range(T):
                terms.append((int(form.pc[idx, t]), -w_soc * e))
                terms.append((int(form.pw[idx, t]), w_soc / e))
        const -= w_soc * float(form.soc_init.sum())
    m.set_objective(terms, const)
    return form


# -- solutions ------------------------------------------------------------------


@dataclass
class PlanSolution:
    """Investment decisions: batteries ``x`` and solar units ``a`` per bus, hardening ``y`` per line."""

    x: np.ndarray
    a: np.ndarray
    y: np.ndarray
    budget: float = 0.0
    hardening: Hardening | None = None
    battery: BatterySpec = field(default_factory=BatterySpec)
    solar_price: float = 940e-6
    spent: dict[str, float] = field(default_factory=dict)
    scenario: int | None = None
    objective: dict[str, float] = field(default_factory=dict)

    @property
    def beta(self) -> float:
        return self.hardening.beta if self.hardening is not None else 0.0

    @property
    def total_spent(self) -> float:
        return float(sum(self.spent.values()))

    @classmethod
    def empty(cls, network: Network, battery: BatterySpec | None = None) -> "PlanSolution":
        return cls(
            np.zeros(network.n_buses, dtype=int),
            np.zeros(network.n_buses),
            np.zeros(network.n_lines, dtype=int),
            battery=battery or BatterySpec(),
            spent={"battery": 0.0, "solar": 0.0, "hardening": 0.0},
        )

    def to_dict(self, network: Network) -> dict[str, Any]:
        return {
            "version": 1,
            "scenario": self.scenario,
            "budget": self.budget,
            "hardening": self.hardening.value if self.hardening else None,
            "batteries": {network.buses[n].id: int(v) for n, v in enumerate(self.x) if v},
            "solar_units": {network.buses[n].id: round(float(v), 6) for n, v in enumerate(self.a) if v > 0},
            "hardened_lines": [network.lines[l].id for l, v in enumerate(self.y) if v],
            "spent": {k: round(v, 9) for k, v in self.spent.items()},
            "objective": {k: round(float(v), 12) for k, v in self.objective.items()},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any], network: Network) -> "PlanSolution":
        x = np.zeros(network.n_buses, dtype=int)
        a = np.zeros(network.n_buses)
        y = np.zeros(network.n_lines, dtype=int)
        for bid, v in (data.get("batteries") or {}).items():
            x[network.bus_index(bid)] = int(v)
        for bid, v in (data.get("solar_units") or {}).items():
            a[network.bus_index(bid)] = float(v)
        for lid in data.get("hardened_lines") or []:
            y[network.line_index(lid)] = 1
        hard = data.get("hardening")
        return cls(
            x,
            a,
            y,
            budget=float(data.get("budget") or 0.0),
            hardening=Hardening(hard) if hard else None,
            spent=dict(data.get("spent") or {}),
            scenario=data.get("scenario"),
            objective=dict(data.get("objective") or {}),
        )


def save_plan(plan: PlanSolution, network: Network, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(plan.to_dict(network), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_plan(path: str | Path, network: Network) -> PlanSolution:
    with open(path) as fh:
        return PlanSolution.from_dict(json.load(fh), network)


@dataclass
class DispatchSolution:
    """Operating decisions for one day; arrays are indexed by element then hour.

    ``soc[n, t]`` is the energy stored at bus ``n`` at the start of hour ``t``
    (column ``T`` holds the end-of-day value).
    """

    z: np.ndarray
    f: np.ndarray
    theta: np.ndarray
    pg: np.ndarray
    ls: np.ndarray
    pc: np.ndarray
    pw: np.ndarray
    ps: np.ndarray
    soc: np.ndarray
    shed_fraction: float
    risk_fraction: float
    soc_term: float
    objective: float
    status: Status = Status.OPTIMAL
    gap: float = 0.0

    @property
    def shed(self) -> float:
        return float(self.ls.sum())

    @property
    def final_soc(self) -> np.ndarray:
        return self.soc[:, -1]


def _val(x: np.ndarray, ids: np.ndarray | None) -> np.ndarray:
    if ids is None:
        return np.zeros(0)
    return np.where(ids >= 0, x[np.maximum(ids, 0)], 0.0)


def decode(form: Formulation, result: SolveResult) -> tuple[DispatchSolution, PlanSolution | None]:
    """Typed solutions from a solver assignment; the objective is recomputed and cross-checked."""
    if result.status in (Status.INFEASIBLE, Status.UNBOUNDED, Status.NUMERICAL) or result.x is None:
        raise DecodeError(f"no solution to decode (status {result.status.value})")
    x = result.x
    net, T = form.network, form.hours
    N, L = net.n_buses, net.n_lines

    z = np.ones(L)
    z[form.switchable] = np.round(x[form.z[form.switchable]]) + 0.0  # no -0.0
    pc = np.zeros((N, T))
    pw = np.zeros((N, T))
    ps = np.zeros((N, T))
    for idx, n in enumerate(form.battery_buses):
        pc[n] = x[form.pc[idx]]
        pw[n] = x[form.pw[idx]]
    for idx, n in enumerate(form.solar_buses):
        ps[n] = x[form.ps[idx]]

    plan = None
    if form.kind == "invest":
        cat = form.catalog
        xs = np.zeros(N, dtype=int)
        a = np.zeros(N)
        y = np.zeros(L, dtype=int)
        for idx, n in enumerate(form.battery_buses):
            xs[n] = int(round(x[form.x[idx]]))
        for idx, n in enumerate(form.solar_buses):
            a[n] = max(0.0, x[form.a[idx]])
        for idx, l in enumerate(form.harden_lines):
            y[l] = int(round(x[form.y[idx]]))
        plan = PlanSolution(
            xs,
            a,
            y,
            budget=cat.budget,
            hardening=cat.hardening,
            battery=cat.battery,
            solar_price=cat.solar_price,
            spent=cat.cost_breakdown(net, xs, a, y),
            scenario=cat.scenario,
        )
        soc_start = xs * cat.battery.initial_charge
        y_eff = y
    elif form.kind == "seq":
        soc_start = form.soc_init
        y_eff = form.fixed_y
    else:
        soc_start = np.zeros(N)
        y_eff = np.zeros(L)

    e = form.battery.efficiency
    soc = np.zeros((N, T + 1))
    soc[:, 0] = soc_start
    for t in range(T):
        soc[:, t + 1] = soc[:, t] + e * pc[:, t] - pw[:, t] / e

    ls = x[form.ls]
    shed_fraction = float(ls.sum()) / form.D
    remaining = float(np.sum(form.risk * z * (1 - form.beta * y_eff)))
    risk_fraction = remaining / form.R if form.R > 0 else 0.0
    soc_term = 0.0
    if form.kind == "seq" and form.gamma > 0 and form.e_total > 0:
        soc_term = form.gamma * float(soc[:, T].sum()) / form.e_total
    objective = form.alpha * shed_fraction + (1 - form.alpha) * risk_fraction - soc_term
    if abs(objective - result.objective) > AUDIT_TOL:
        raise DecodeError(f"objective mismatch: recomputed {objective:.12g} vs solver {result.objective:.12g}")

    dispatch = DispatchSolution(
        z=z,
        f=x[form.f],
        theta=x[form.theta],
        pg=x[form.pg],
        ls=ls,
        pc=pc,
        pw=pw,
        ps=ps,
        soc=soc,
        shed_fraction=shed_fraction,
        risk_fraction=risk_fraction,
        soc_term=soc_term,
        objective=objective,
        status=result.status,
        gap=result.gap,
    )
    if plan is not None:
        plan.objective = {
            "objective": objective,
            "shed_fraction": shed_fraction,
            "risk_fraction": risk_fraction,
        }
    return dispatch, plan


def audit(
    form: Formulation,
    dispatch: DispatchSolution,
    plan: PlanSolution | None = None,
    tol: float = AUDIT_TOL,
) -> list[str]:
    """Check a decoded day against the physical and investment rules directly
    from network data.  Returns human-readable violations (empty when clean)."""
    net, T = form.network, form.hours
    bad: list[str] = []
    d = form.demand.values
    if form.kind == "invest":
        x_cap = plan.x.astype(float)
        a_cap = plan.a
        y = plan.y
    elif form.kind == "seq":
        x_cap, a_cap, y = form.fixed_x, form.fixed_a, form.fixed_y
    else:
        x_cap = np.zeros(net.n_buses)
        a_cap = np.zeros(net.n_buses)
        y = np.zeros(net.n_lines)

    inj = -d + dispatch.ls - dispatch.pc + dispatch.pw + dispatch.ps
    for g in net.generators:
        inj[g.bus] += dispatch.pg[g.index]
        if np.any(dispatch.pg[g.index] < g.p_min - tol) or np.any(dispatch.pg[g.index] > g.p_max + tol):
            bad.append(f"generator {g.id} outside limits")
    out = np.zeros_like(inj)
    for l in net.lines:
        out[l.from_bus] += dispatch.f[l.index]
        out[l.to_bus] -= dispatch.f[l.index]
    err = np.abs(out - inj)
    if err.max(initial=0) > tol:
        n, t = np.unravel_index(np.argmax(err), err.shape)
        bad.append(f"nodal balance off by {err[n, t]:.3g} at bus {net.buses[n].id} hour {t}")

    for l in net.lines:
        zl = dispatch.z[l.index]
        fl = dispatch.f[l.index]
        dth = dispatch.theta[l.from_bus] - dispatch.theta[l.to_bus]
        if np.any(np.abs(fl) > l.flow_limit * zl + tol):
            bad.append(f"line {l.id} flow exceeds limit (z={zl:g})")
        if zl == 1:
            if np.any(np.abs(fl + l.susceptance * dth) > tol):
                bad.append(f"line {l.id} flow differs from -b*dtheta while energised")
            if np.any(dth > l.angle_max + tol) or np.any(dth < l.angle_min - tol):
                bad.append(f"line {l.id} angle difference outside limits")
        elif not form.switchable[l.index]:
            bad.append(f"non-switchable line {l.id} de-energised")

    if np.any(dispatch.ls < -tol) or np.any(dispatch.ls > np.maximum(d, 0) + tol):
        bad.append("load shed outside [0, max(demand, 0)]")

    bat = form.battery
    e = bat.efficiency
    steps = dispatch.soc[:, 1:] - dispatch.soc[:, :-1]
    if np.any(np.abs(steps - (e * dispatch.pc - dispatch.pw / e)) > tol):
        bad.append("state-of-charge recursion violated")
    lo = (x_cap * bat.e_min)[:, None]
    hi = (x_cap * bat.e_max)[:, None]
    if np.any(dispatch.soc < lo - tol) or np.any(dispatch.soc > hi + tol):
        bad.append("state of charge outside storage limits")
    if np.any(dispatch.pc * dispatch.pw > 1e-9):
        bad.append("simultaneous charging and discharging")
    if np.any(dispatch.pc > (bat.charge_max * x_cap)[:, None] + tol) or np.any(dispatch.pc < -tol):
        bad.append("charge rate outside limits")
    if np.any(dispatch.pw > (bat.discharge_max * x_cap)[:, None] + tol) or np.any(dispatch.pw < -tol):
        bad.append("discharge rate outside limits")
    S = form.solar.values if form.solar is not None else np.zeros_like(d)
    if np.any(dispatch.ps > S * a_cap[:, None] + tol) or np.any(dispatch.ps < -tol):
        bad.append("solar output above availability")

    for l in range(net.n_lines):
        if y[l] and dispatch.z[l] == 0:
            bad.append(f"line {net.lines[l].id} both hardened and de-energised")
    if plan is not None:
        if plan.total_spent > plan.budget + tol:
            bad.append(f"spend {plan.total_spent:.6g} exceeds budget {plan.budget:.6g}")
        if form.kind == "invest":
            cat = form.catalog
            if np.any(plan.x[[n for n in range(net.n_buses) if n not in cat.battery_buses]] != 0):
                bad.append("battery placed outside candidate set")
            if np.any(plan.y[[l for l in range(net.n_lines) if l not in cat.harden_lines]] != 0):
                bad.append("hardening outside candidate set")
            if np.any(plan.x < 0) or np.any(plan.a < -tol):
                bad.append("negative investment")
    return bad


def write_dispatch_csv(dispatch: DispatchSolution, network: Network, bus_path: str | Path, line_path: str | Path) -> None:
    """Per bus-hour and per line-hour tables of a dispatched day."""
    N, T = dispatch.ls.shape
    gen = np.zeros((N, T))
    for g in network.generators:
        gen[g.bus] += dispatch.pg[g.index]
    with open(bus_path, "w", newline="") as fh:
        fh.write("# pspsplan dispatch-bus v1\n")
        fh.write("bus,hour,theta,generation,shed,charge,discharge,solar,soc_start\n")
        for b in network.buses:
            n = b.index
            for t in range(T):
                vals = (dispatch.theta[n, t], gen[n, t], dispatch.ls[n, t], dispatch.pc[n, t],
                        dispatch.pw[n, t], dispatch.ps[n, t], dispatch.soc[n, t])
                fh.write(f"{b.id},{t}," + ",".join(f"{v:.9g}" for v in vals) + "\n")
    with open(line_path, "w", newline="") as fh:
        fh.write("# pspsplan dispatch-line v1\n")
        fh.write("line,hour,energized,flow\n")
        for l in network.lines:
            for t in range(T):
                fh.write(f"{l.id},{t},{int(dispatch.z[l.index])},{dispatch.f[l.index, t]:.9g}\n")


# -- model size -----------------------------------------------------------------


@dataclass(frozen=True)
class ModelDims:
    generators: int
    buses: int
    lines: int
    switchable: int
    battery_buses: int
    solar_buses: int
    harden_lines: int
    harden_and_switch: int
    hours: int = 24

    @classmethod
    def from_network(
        cls,
        network: Network,
        catalog: InvestmentCatalog | None = None,
        switchable: Sequence[int] | None = None,
        hours: int = 24,
    ) -> "ModelDims":
        sw = _switch_mask(network, switchable)
        harden = set(catalog.harden_lines) if catalog else set()
        return cls(
            network.n_generators,
            network.n_buses,
            network.n_lines,
            int(sw.sum()),
            len(catalog.battery_buses) if catalog else 0,
            len(catalog.solar_buses) if catalog else 0,
            len(harden),
            sum(1 for l in harden if sw[l]),
            hours,
        )


def count_model(dims: ModelDims) -> dict[str, int]:
    """Variable and constraint counts of the investment model by closed-form expression."""
    G, N, L, T = dims.generators, dims.buses, dims.lines, dims.hours
    Ls, Nb, Ns, Lh = dims.switchable, dims.battery_buses, dims.solar_buses, dims.harden_lines
    fixed = L - Ls
    return {
        "continuous": G * T + 2 * N * T + L * T + 2 * Nb * T + Ns * (1 + T),
        "integer": Ls + Nb * (1 + T) + Lh,
        "bound": 2 * G * T + 2 * N * T + 2 * fixed * T,
        "inequality": 4 * Ls * T + 4 * fixed * T + 8 * Nb * T + Ns * T + dims.harden_and_switch,
        "equality": N * T,
    }


RTS_DIMS = ModelDims(99, 73, 120, 120, 73, 73, 120, 120)
WECC_DIMS = ModelDims(143, 240, 448, 448, 240, 240, 448, 448)
WECC_LIMITED_DIMS = ModelDims(143, 240, 448, 100, 174, 240, 448, 100)
