"""Wildfire-mitigation investment planning with PSPS de-energisation."""

from .formulations import (
    DecodeError,
    DispatchSolution,
    Formulation,
    ModelDims,
    PlanSolution,
    audit,
    big_m_angles,
    build_invest,
    build_mtp_psps,
    build_seq,
    count_model,
    decode,
    load_plan,
    save_plan,
)
from .investments import SCENARIOS, BatterySpec, Hardening, InvestmentCatalog, Scenario, catalog_for_scenario
from .milp import MilpModel, SolveOptions, SolveResult, Status, export_model, solve
from .network import (
    DemandSeries,
    Network,
    NetworkError,
    NormalizationError,
    SolarProfile,
    apply_profile,
    load_network,
    total_demand,
)
from .risk import (
    RiskProfile,
    RiskRaster,
    RiskTable,
    build_risk_table,
    integrate_line_risk,
    psps_days,
    psps_threshold,
    representative_profile,
)
from .season import SeasonResult, simulate_season
from .sweeps import CaseResult, SweepGrid, SweepInputs, budget_breakdown, run_sweep, tradeoff_curve

__version__ = "0.1.0"
