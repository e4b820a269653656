"""Run configuration and input preparation shared by the command line and demos."""

from __future__ import annotations

import datetime as dt
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .investments import SCENARIOS
from .milp import SolveOptions
from .network import DemandSeries, Network, SolarProfile, apply_profile, load_network, load_profile_csv, load_solar_csv
from .risk import (
    DEFAULT_STEP_MILES,
    RiskProfile,
    RiskTable,
    build_risk_table,
    load_raster_csv,
    psps_threshold,
    representative_profile,
)
from .sweeps import DEFAULT_ALPHAS, DEFAULT_BUDGETS, SweepGrid, SweepInputs

OUT_DIR_ENV = "PSPS_OUT_DIR"


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    base_dir: Path
    network: Path
    risk_raster: Path | None = None
    risk_csv: Path | None = None
    load_profile: Path | None = None
    solar: Path | None = None
    planning_years: tuple[int, ...] = (2019, 2020)
    evaluation_year: int = 2021
    season_start: tuple[int, int] = (6, 1)
    season_end: tuple[int, int] = (10, 31)
    alpha: float = 0.5
    budget: float = 100.0
    scenario: int = 1
    gamma: float = 0.01
    gap: float = 0.01
    percentile: float = 0.75
    top_fraction: float = 0.10
    risk_step: float = DEFAULT_STEP_MILES
    solver: str = "builtin"
    lp_engine: str = "simplex"
    time_limit: float = math.inf
    node_limit: int = 1_000_000
    seed: int = 0
    workers: int = 1
    output_dir: Path | None = None
    battery_buses: tuple[str, ...] | None = None
    solar_buses: tuple[str, ...] | None = None
    harden_lines: tuple[str, ...] | None = None
    switchable_lines: tuple[str, ...] | None = None
    sweep_scenarios: tuple[int, ...] = (1,)
    sweep_budgets: tuple[float, ...] = DEFAULT_BUDGETS
    sweep_alphas: tuple[float, ...] = DEFAULT_ALPHAS
    save_plans: bool = False

    def check(self) -> "RunConfig":
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie strictly between 0 and 1, got {self.alpha}")
        if self.budget < 0:
            raise ConfigError("budget must be >= 0")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be 1..8, got {self.scenario}")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.gap < 0:
            raise ConfigError("gap must be >= 0")
        if not 0 < self.percentile <= 1 or not 0 < self.top_fraction <= 1:
            raise ConfigError("percentile and top_fraction must lie in (0, 1]")
        if self.risk_step <= 0:
            raise ConfigError("risk_step must be > 0")
        if self.solver not in ("builtin", "export-only"):
            raise ConfigError(f"solver must be 'builtin' or 'export-only', got {self.solver!r}")
        if self.lp_engine not in ("simplex", "highs"):
            raise ConfigError(f"lp_engine must be 'simplex' or 'highs', got {self.lp_engine!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if (self.risk_raster is None) == (self.risk_csv is None):
            raise ConfigError("give exactly one risk source: risk.raster or risk.csv")
        if not self.planning_years:
            raise ConfigError("planning_years is empty")
        for path in (self.network, self.risk_raster, self.risk_csv, self.load_profile, self.solar):
            if path is not None and not path.is_file():
                raise ConfigError(f"input file not found: {path}")
        try:
            SweepGrid(self.sweep_scenarios, self.sweep_budgets, self.sweep_alphas)
        except ValueError as exc:
            raise ConfigError(f"sweep grid: {exc}") from None
        return self

    @property
    def solve_options(self) -> SolveOptions:
        return SolveOptions(relative_gap=self.gap, time_limit=self.time_limit, node_limit=self.node_limit,
                            deterministic_seed=self.seed, lp_engine=self.lp_engine)

    @property
    def grid(self) -> SweepGrid:
        return SweepGrid(self.sweep_scenarios, self.sweep_budgets, self.sweep_alphas)

    def out_dir(self) -> Path:
        if self.output_dir is not None:
            return self.output_dir
        env = os.environ.get(OUT_DIR_ENV)
        return Path(env) if env else self.base_dir / "out"


def _path(base: Path, value: Any) -> Path | None:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


def _ids(value: Any) -> tuple[str, ...] | None:
    if value is None:
        return None
    return tuple(str(v) for v in value)


def _month_day(value: Any, what: str) -> tuple[int, int]:
    try:
        m, d = (int(v) for v in value)
        dt.date(2000, m, d)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be [month, day], got {value!r}") from None
    return (m, d)


def config_from_dict(data: Mapping[str, Any], base_dir: str | Path = ".") -> RunConfig:
    """Build a config from a parsed JSON document; relative paths resolve against ``base_dir``."""
    base = Path(base_dir)
    known = {
        "network", "risk", "load_profile", "solar", "planning_years", "evaluation_year", "season", "alpha",
        "budget", "scenario", "gamma", "gap", "percentile", "top_fraction", "risk_step", "solver", "lp_engine",
        "time_limit", "node_limit", "seed", "workers", "output_dir", "candidates", "sweep",
    }
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    if "network" not in data:
        raise ConfigError("config needs a 'network' path")
    risk = data.get("risk") or {}
    if not isinstance(risk, Mapping):
        raise ConfigError("'risk' must be an object with 'raster' or 'csv'")
    season = data.get("season") or {}
    cand = data.get("candidates") or {}
    sweep = data.get("sweep") or {}
    try:
        cfg = RunConfig(
            base_dir=base,
            network=_path(base, data["network"]),
            risk_raster=_path(base, risk.get("raster")),
            risk_csv=_path(base, risk.get("csv")),
            load_profile=_path(base, data.get("load_profile")),
            solar=_path(base, data.get("solar")),
            planning_years=tuple(int(y) for y in data.get("planning_years", (2019, 2020))),
            evaluation_year=int(data.get("evaluation_year", 2021)),
            season_start=_month_day(season.get("start", (6, 1)), "season.start"),
            season_end=_month_day(season.get("end", (10, 31)), "season.end"),
            alpha=float(data.get("alpha", 0.5)),
            budget=float(data.get("budget", 100.0)),
            scenario=int(data.get("scenario", 1)),
            gamma=float(data.get("gamma", 0.01)),
            gap=float(data.get("gap", 0.01)),
            percentile=float(data.get("percentile", 0.75)),
            top_fraction=float(data.get("top_fraction", 0.10)),
            risk_step=float(data.get("risk_step", DEFAULT_STEP_MILES)),
            solver=str(data.get("solver", "builtin")),
            lp_engine=str(data.get("lp_engine", "simplex")),
            time_limit=float(data.get("time_limit", math.inf)),
            node_limit=int(data.get("node_limit", 1_000_000)),
            seed=int(data.get("seed", 0)),
            workers=int(data.get("workers", 1)),
            output_dir=_path(base, data.get("output_dir")),
            battery_buses=_ids(cand.get("battery_buses")),
            solar_buses=_ids(cand.get("solar_buses")),
            harden_lines=_ids(cand.get("harden_lines")),
            switchable_lines=_ids(cand.get("switchable_lines")),
            sweep_scenarios=tuple(int(s) for s in sweep.get("scenarios", (1,))),
            sweep_budgets=tuple(float(b) for b in sweep.get("budgets", DEFAULT_BUDGETS)),
            sweep_alphas=tuple(float(a) for a in sweep.get("alphas", DEFAULT_ALPHAS)),
            save_plans=bool(sweep.get("save_plans", False)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from None
    return cfg


def load_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read a JSON config; ``overrides`` (command-line flags) win over file values."""
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    cfg = config_from_dict(data, path.parent)
    if overrides:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.check()


@dataclass
class Prepared:
    config: RunConfig
    network: Network
    table: RiskTable
    planning_table: RiskTable
    evaluation_table: RiskTable
    profile: RiskProfile
    threshold: float
    planning_date: dt.date
    planning_demand: DemandSeries
    season_profiles: dict[dt.date, np.ndarray] = field(default_factory=dict)
    solar: SolarProfile | None = None

    def bus_indices(self, ids) -> tuple[int, ...] | None:
        if ids is None:
            return None
        try:
            return tuple(self.network.bus_index(b) for b in ids)
        except (KeyError, ValueError):
            raise ConfigError(f"candidate bus ids {list(ids)} not all in network") from None

    def line_indices(self, ids) -> tuple[int, ...] | None:
        if ids is None:
            return None
        try:
            return tuple(self.network.line_index(l) for l in ids)
        except (KeyError, ValueError):
            raise ConfigError(f"candidate line ids {list(ids)} not all in network") from None

    def sweep_inputs(self, replay: bool = True) -> SweepInputs:
        cfg = self.config
        return SweepInputs(
            network=self.network,
            planning_risk=self.profile.r,
            planning_demand=self.planning_demand,
            solar=self.solar,
            season_table=self.evaluation_table if replay else None,
            season_demands=self.season_profiles,
            threshold=self.threshold if replay else None,
            gamma=cfg.gamma,
            options=cfg.solve_options,
            battery_buses=self.bus_indices(cfg.battery_buses),
            solar_buses=self.bus_indices(cfg.solar_buses),
            harden_lines=self.line_indices(cfg.harden_lines),
            switchable=self.line_indices(cfg.switchable_lines),
        )


def prepare(cfg: RunConfig) -> Prepared:
    """Load inputs and derive the planning profile, demand day and PSPS threshold."""
    network = load_network(cfg.network)
    if cfg.risk_raster is not None:
        table = build_risk_table(load_raster_csv(cfg.risk_raster), network, cfg.risk_step)
    else:
        table = build_risk_table(cfg.risk_csv, network)
    table = table.season(cfg.season_start, cfg.season_end)
    planning = table.select(years=cfg.planning_years)
    evaluation = table.select(years=[cfg.evaluation_year])
    if planning.n_days == 0:
        raise ConfigError(f"risk data has no days in planning years {list(cfg.planning_years)}")
    profile = representative_profile(planning, cfg.top_fraction)
    threshold = psps_threshold(planning.daily_total, cfg.percentile)

    if cfg.load_profile is not None:
        profiles = load_profile_csv(cfg.load_profile)
    else:
        profiles = {d: np.ones(24) for d in table.dates}
    missing = [d for d in planning.dates + evaluation.dates if d not in profiles]
    if missing:
        raise ConfigError(f"load profile lacks {len(missing)} season days, first {missing[0]}")
    # plan against the heaviest planning day
    planning_date = max(planning.dates, key=lambda d: (float(np.sum(profiles[d])), d))
    planning_demand = apply_profile(network, profiles[planning_date], planning_date.isoformat())
    solar = load_solar_csv(cfg.solar, network) if cfg.solar is not None else None
    return Prepared(
        cfg, network, table, planning, evaluation, profile, threshold, planning_date, planning_demand,
        {d: profiles[d] for d in evaluation.dates}, solar,
    )
