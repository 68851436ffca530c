"""Command-line entry point.

    evflex run --mode all --seed 7 --out results/
    evflex verify
    evflex gen --out data/

Exit status: 0 on success, 1 when a schedule is infeasible (or the oracle
check fails), 2 on bad input.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .exceptions import EVFlexError, Infeasible, LimitReached
from .oracle import micro_battery, oracle_enumerate
from .report import emit_cost_table, emit_mode_costs, emit_series, format_table
from .scenario import (MODES, ScenarioConfig, build_mode_models, build_scenario,
                       default_buildings, read_config, run_scenario, write_config,
                       write_net_load_csv)
from .schedule import build_model, solve_schedule
from .solver import SolveOptions, export_lp_file
from .tariffs import default_wholesale_profile, write_wholesale_csv

log = logging.getLogger("evflex")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evflex", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a scenario and write cost tables and series")
    run.add_argument("--config", type=Path)
    run.add_argument("--mode", choices=MODES + ("all",), default="all")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", type=Path, default=Path("results"))
    run.add_argument("--export-lp", type=Path)
    run.add_argument("--dt", type=float)
    run.add_argument("--time-limit", type=float)

    ver = sub.add_parser("verify", help="compare the MILP with brute force on micro scenarios")
    ver.add_argument("--count", type=int, default=24)
    ver.add_argument("--seed", type=int, default=2024)

    gen = sub.add_parser("gen", help="write a default config and synthetic input files")
    gen.add_argument("--out", type=Path, default=Path("scenario"))
    gen.add_argument("--dt", type=float)
    return p


def _load_config(args) -> ScenarioConfig:
    cfg = read_config(args.config) if args.config else ScenarioConfig()
    changes = {}
    if args.seed is not None:
        changes["rng_seed"] = args.seed
    if args.dt is not None:
        changes["dt"] = args.dt
    return dataclasses.replace(cfg, **changes)


def _export_lp(scn, mode, path: Path) -> None:
    if mode == "baseline":
        return
    models = build_mode_models(scn, "community" if mode == "all" else mode)
    if len(models) == 1:
        export_lp_file(models[0].model, path)
        return
    for built in models:
        bid = built.buildings[0].building_id
        export_lp_file(built.model, path.with_name(f"{path.stem}_{bid}{path.suffix}"))


def cmd_run(args) -> int:
    cfg = _load_config(args)
    scn = build_scenario(cfg)
    opts = SolveOptions(time_limit_seconds=args.time_limit)
    modes = MODES if args.mode == "all" else (args.mode,)
    runs = {}
    for mode in modes:
        log.info("solving %s", mode)
        runs[mode] = run_scenario(scn, mode, opts)
        emit_mode_costs(runs[mode], args.out)
        emit_series(runs[mode], scn, args.out)
    if args.mode == "all":
        bundle = emit_cost_table(runs, args.out)
        sys.stdout.write(format_table(bundle.rows))
    else:
        run = runs[args.mode]
        print(f"{args.mode}: C_E {run.electricity_cost:.1f}  C_EV {-run.ev_revenue:.1f}  "
              f"objective {run.objective:.1f}")
    if args.export_lp:
        _export_lp(scn, args.mode, args.export_lp)
    return 0


def cmd_verify(args) -> int:
    failures = 0
    for i, micro in enumerate(micro_battery(args.count, args.seed)):
        oracle = oracle_enumerate(micro)
        built = build_model(micro.grid, micro.buildings, micro.fleets, micro.tariffs,
                            micro.community)
        milp = solve_schedule(built).objective
        ok = abs(milp - oracle) <= 1e-6 * max(1.0, abs(oracle))
        failures += not ok
        kind = "community" if micro.community else "individual"
        print(f"{'PASS' if ok else 'FAIL'} micro {i:02d} ({len(micro.buildings)} bldg, "
              f"{micro.grid.steps} steps, {kind}): milp {milp:.9f} oracle {oracle:.9f}")
    print(f"{args.count - failures}/{args.count} micro scenarios agree")
    return 1 if failures else 0


def cmd_gen(args) -> int:
    cfg = ScenarioConfig() if args.dt is None else ScenarioConfig(dt=args.dt)
    out = args.out
    (out / "net_load").mkdir(parents=True, exist_ok=True)
    for b in default_buildings(cfg):
        write_net_load_csv(b, out / "net_load" / f"{b.building_id}.csv")
    write_wholesale_csv(out / "wholesale.csv",
                        default_wholesale_profile(cfg.grid) * cfg.wholesale_monthly_avg)
    write_config(dataclasses.replace(cfg, wholesale_file="wholesale.csv",
                                     net_load_dir="net_load"), out / "scenario.cfg")
    print(f"wrote {out / 'scenario.cfg'}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handler = {"run": cmd_run, "verify": cmd_verify, "gen": cmd_gen}[args.command]
    try:
        return handler(args)
    except (Infeasible, LimitReached) as exc:
        print(f"evflex: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, EVFlexError) as exc:
        print(f"evflex: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
