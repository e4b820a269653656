"""Command-line entry point: ``pspsplan {validate,plan,simulate,sweep}``.

Exit codes: 0 success, 2 configuration or input error, 3 solve failure,
4 file I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .formulations import DecodeError, ModelDims, build_invest, count_model, decode, load_plan, save_plan
from .investments import catalog_for_scenario
from .milp import Status, export_model, solve
from .network import NetworkError, NormalizationError
from .pipeline import ConfigError, Prepared, load_config, prepare
from .risk import RiskDataError
from .season import simulate_season
from .sweeps import run_sweep, write_breakdown_csv, write_plans, write_sweep_csv, write_tradeoff_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVE = 3
EXIT_IO = 4


class SolveFailure(RuntimeError):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    common.add_argument("--alpha", type=float, help="shed/risk trade-off weight in (0, 1)")
    common.add_argument("--budget", type=float, help="investment budget in $M")
    common.add_argument("--scenario", type=int, help="investment scenario 1-8")
    common.add_argument("--gap", type=float, help="relative MIP gap")
    common.add_argument("--gamma", type=float, help="weight of the end-of-day storage reward")
    common.add_argument("--seed", type=int, help="deterministic seed")
    common.add_argument("--workers", type=int, help="parallel worker processes for sweeps")
    common.add_argument("--solver", choices=("builtin", "export-only"), help="solve, or only write the model")
    common.add_argument("--out", type=Path, help="output directory (falls back to $PSPS_OUT_DIR)")

    p = argparse.ArgumentParser(prog="pspsplan", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="load and check all inputs, print model sizes")
    sub.add_parser("plan", parents=[common], help="solve the investment model, write plan.json")
    sim = sub.add_parser("simulate", parents=[common], help="replay the evaluation season with a plan")
    sim.add_argument("--plan", type=Path, help="plan file (default: <out>/plan.json)")
    sub.add_parser("sweep", parents=[common], help="scenario x budget x alpha grid")
    return p


def _overrides(args) -> dict:
    return {
        "alpha": args.alpha,
        "budget": args.budget,
        "scenario": args.scenario,
        "gap": args.gap,
        "gamma": args.gamma,
        "seed": args.seed,
        "workers": args.workers,
        "solver": args.solver,
        "output_dir": args.out,
    }


def _catalog(prep: Prepared):
    cfg = prep.config
    return catalog_for_scenario(
        prep.network,
        cfg.scenario,
        cfg.budget,
        prep.bus_indices(cfg.battery_buses),
        prep.bus_indices(cfg.solar_buses),
        prep.line_indices(cfg.harden_lines),
    )


def cmd_validate(prep: Prepared, out) -> int:
    net = prep.network
    cat = _catalog(prep)
    dims = ModelDims.from_network(net, cat, prep.line_indices(prep.config.switchable_lines), prep.planning_demand.hours)
    counts = count_model(dims)
    print(f"network {net.name}: {net.n_buses} buses, {net.n_lines} lines, {net.n_generators} generators", file=out)
    print(f"risk: {prep.table.n_days} season days, {prep.planning_table.n_days} planning, "
          f"{prep.evaluation_table.n_days} evaluation", file=out)
    print(f"PSPS threshold: {prep.threshold:.6g}; planning demand day {prep.planning_date}", file=out)
    print(f"scenario {cat.scenario}, budget {cat.budget:g} $M", file=out)
    for key in ("continuous", "integer", "bound", "inequality", "equality"):
        print(f"{key}: {counts[key]}", file=out)
    return EXIT_OK


def cmd_plan(prep: Prepared, out) -> int:
    cfg = prep.config
    out_dir = cfg.out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    form = build_invest(prep.network, prep.profile.r, prep.planning_demand, cfg.alpha, _catalog(prep), prep.solar,
                        prep.line_indices(cfg.switchable_lines))
    if cfg.solver == "export-only":
        for fmt in ("lp", "mps"):
            path = export_model(form.model, out_dir / f"invest.{fmt}")
            print(f"wrote {path}", file=out)
        return EXIT_OK
    result = solve(form.model, cfg.solve_options)
    try:
        dispatch, plan = decode(form, result)
    except DecodeError as exc:
        raise SolveFailure(str(exc)) from None
    save_plan(plan, prep.network, out_dir / "plan.json")
    metrics = {
        "version": 1,
        "status": result.status.value,
        "gap": result.gap,
        "nodes": result.nodes,
        "objective": dispatch.objective,
        "shed_fraction": dispatch.shed_fraction,
        "risk_fraction": dispatch.risk_fraction,
        "planning_day": prep.planning_date.isoformat(),
        "spent": plan.spent,
    }
    with open(out_dir / "plan_metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"{result.status.value} (gap {result.gap:.4g}) objective {dispatch.objective:.6g}: "
          f"shed {dispatch.shed_fraction:.4f}, risk {dispatch.risk_fraction:.4f}", file=out)
    print(f"batteries {int(plan.x.sum())}, solar units {plan.a.sum():.1f}, hardened lines {int(plan.y.sum())}; "
          f"spent {plan.total_spent:.4g} of {cfg.budget:g} $M", file=out)
    return EXIT_OK if result.status is Status.OPTIMAL else EXIT_SOLVE


def cmd_simulate(prep: Prepared, plan_path: Path | None, out) -> int:
    cfg = prep.config
    out_dir = cfg.out_dir()
    plan_path = plan_path or out_dir / "plan.json"
    if not plan_path.is_file():
        raise ConfigError(f"plan file not found: {plan_path}")
    plan = load_plan(plan_path, prep.network)
    season = simulate_season(prep.network, plan, prep.evaluation_table, prep.season_profiles, cfg.alpha,
                             prep.threshold, cfg.gamma, prep.solar, cfg.solve_options,
                             prep.line_indices(cfg.switchable_lines))
    out_dir.mkdir(parents=True, exist_ok=True)
    season.to_csv(out_dir / "season.csv")
    print(f"{len(season.psps_records)} PSPS days of {len(season.days)}; "
          f"shed fraction {season.shed_fraction:.4f}, risk fraction {season.risk_fraction:.4f}", file=out)
    if season.failed:
        print(f"{len(season.failed)} days without a solution", file=out)
        return EXIT_SOLVE
    return EXIT_OK


def cmd_sweep(prep: Prepared, out) -> int:
    cfg = prep.config
    out_dir = cfg.out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_sweep(prep.sweep_inputs(), cfg.grid, cfg.workers)
    write_sweep_csv(results, out_dir / "sweep.csv")
    write_tradeoff_csv(results, out_dir / "tradeoff.csv")
    write_breakdown_csv(results, out_dir / "breakdown.csv")
    if cfg.save_plans:
        write_plans(results, prep.network, out_dir / "plans")
    bad = [r for r in results if r.error]
    print(f"{len(results)} cases, {len(bad)} failed; wrote {out_dir / 'sweep.csv'}", file=out)
    return EXIT_SOLVE if bad else EXIT_OK


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        prep = prepare(cfg)
        if args.command == "validate":
            return cmd_validate(prep, out)
        if args.command == "plan":
            return cmd_plan(prep, out)
        if args.command == "simulate":
            return cmd_simulate(prep, args.plan, out)
        return cmd_sweep(prep, out)
    except SolveFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if exc.filename and Path(exc.filename) == args.config else EXIT_IO
    except (ConfigError, NetworkError, RiskDataError, NormalizationError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
