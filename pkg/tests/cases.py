"""Small random instances shared by the oracle tests and the acceptance suite."""

from __future__ import annotations

import numpy as np

from pspsplan import (
    PlanSolution,
    SolarProfile,
    apply_profile,
    build_invest,
    build_mtp_psps,
    build_seq,
    catalog_for_scenario,
)
from pspsplan.investments import Hardening
from pspsplan.synthetic import random_network

from oracle import OracleCase

KINDS = ("mtp", "invest", "seq")


def random_case(seed: int, kind: str, hours: int = 3):
    """Return ``(formulation, oracle_case)`` for one random instance."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 6))
    lines = int(rng.integers(n - 1, min(n * (n - 1) // 2, 6) + 1))
    net = random_network(n, lines, int(rng.integers(1, 3)), rng, capacity_margin=float(rng.uniform(0.6, 1.6)))
    risk = rng.uniform(0, 100, net.n_lines) * (rng.random(net.n_lines) < 0.8)
    if risk.sum() == 0:
        risk[0] = 10.0
    profile = rng.uniform(0.5, 1.2, hours)
    demand = apply_profile(net, profile, hours=hours)
    alpha = float(rng.choice([0.05, 0.2, 0.5, 0.8, 0.95]))
    n_sw = int(rng.integers(1, net.n_lines + 1))
    sw = tuple(sorted(int(l) for l in rng.choice(net.n_lines, n_sw, replace=False)))
    base = dict(network=net, risk=risk, demand=demand.values, alpha=alpha, switchable=sw)

    if kind == "mtp":
        return build_mtp_psps(net, risk, demand, alpha, sw), OracleCase(**base)

    solar = SolarProfile(rng.uniform(0, 3e-4, (net.n_buses, hours)))
    if kind == "invest":
        budget = float(rng.choice([20.0, 40.0, 60.0, 100.0]))
        scenario = int(rng.choice([1, 6, 7, 8]))
        nb = int(rng.integers(1, 3))
        bat = tuple(sorted(int(b) for b in rng.choice(net.n_buses, nb, replace=False)))
        # keep the enumeration small: two battery buses get a budget of at most 4 units
        if nb == 2:
            budget = min(budget, 80.0)
        hard = tuple(sorted(int(l) for l in rng.choice(net.n_lines, min(2, net.n_lines), replace=False)))
        sol_bus = (int(rng.integers(0, net.n_buses)),)
        cat = catalog_for_scenario(net, scenario, budget, bat, sol_bus, hard)
        form = build_invest(net, risk, demand, alpha, cat, solar, sw)
        case = OracleCase(
            **base,
            budget=budget,
            battery_buses=cat.battery_buses,
            solar_buses=cat.solar_buses,
            harden_lines=cat.harden_lines,
            beta=cat.beta,
            harden_price=cat.harden_price,
            solar=solar.values,
        )
        return form, case

    x = np.zeros(net.n_buses, dtype=int)
    for b in rng.choice(net.n_buses, int(rng.integers(0, 3)), replace=False):
        x[b] = int(rng.integers(1, 4))
    a = np.zeros(net.n_buses)
    a[int(rng.integers(0, net.n_buses))] = float(rng.uniform(0, 2000))
    y = (rng.random(net.n_lines) < 0.3).astype(int)
    plan = PlanSolution(x, a, y, budget=1e6, hardening=Hardening(rng.choice([h.value for h in Hardening])))
    soc0 = x * rng.uniform(0, 1, net.n_buses)
    gamma = float(rng.choice([0.0, 0.01, 0.5]))
    form = build_seq(net, risk, demand, alpha, plan, soc0, gamma, solar, sw)
    case = OracleCase(
        **base, beta=plan.beta, solar=solar.values, plan_x=x, plan_a=a, plan_y=y, soc0=soc0, gamma=gamma
    )
    return form, case


FOUR_BUS_WFPI = (60.0, 120.0, 30.0, 90.0, 45.0)


def four_bus_instance():
    """Committed four-bus network with a fixed risk vector and the default daily load shape."""
    from pspsplan.synthetic import DAILY_SHAPE, SOLAR_SHAPE, four_bus

    net = four_bus()
    risk = np.array([w * l.length for w, l in zip(FOUR_BUS_WFPI, net.lines)])
    demand = apply_profile(net, DAILY_SHAPE)
    solar = SolarProfile.uniform(net, SOLAR_SHAPE)
    return net, risk, demand, solar


# Daily risk of the single line of the two-bus network, June 1-4 of each year.
# Planning totals sorted: 10 20 30 40 50 60 70 80; the nearest-rank 75th
# percentile is the ceil(0.75 * 8) = 6th value, 60.  In 2021 the days at or
# above 60 are June 1 (equal), June 2 and June 4; June 1-2 are consecutive.
TRIGGER_RISK = {
    2019: (10.0, 40.0, 20.0, 70.0),
    2020: (30.0, 50.0, 60.0, 80.0),
    2021: (60.0, 75.0, 20.0, 61.0),
}
TRIGGER_THRESHOLD = 60.0
TRIGGER_DAYS = ("2021-06-01", "2021-06-02", "2021-06-04")


def write_trigger_case(directory, network_dict, extra=None):
    """Two planning seasons and one evaluation season of per-line risk, June 1-4."""
    import json

    directory.mkdir(parents=True, exist_ok=True)
    (directory / "network.json").write_text(json.dumps(network_dict))
    lines = ["line_id,date,risk"]
    for year, values in TRIGGER_RISK.items():
        for day, v in enumerate(values, start=1):
            for k, line in enumerate(network_dict["lines"]):
                # any further lines carry no risk
                lines.append(f"{line['id']},{year}-06-{day:02d},{v if k == 0 else 0.0}")
    (directory / "risk.csv").write_text("\n".join(lines) + "\n")
    config = {
        "network": "network.json",
        "risk": {"csv": "risk.csv"},
        "season": {"start": [6, 1], "end": [6, 4]},
        "alpha": 0.5,
        "budget": 60,
        "scenario": 1,
        "gap": 0.0,
        "output_dir": "out",
    }
    config.update(extra or {})
    (directory / "config.json").write_text(json.dumps(config, indent=1))
    return directory / "config.json"
