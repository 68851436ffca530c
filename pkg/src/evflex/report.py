"""Cost tables and per-step series files."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping

import numpy as np

from .core import ev_power
from .exceptions import ModeMissing
from .scenario import MODES, Scenario, ScenarioRun

COST_COLUMNS = ["building", "base_ce", "ind_ce", "ind_cev", "ind_obj",
                "com_ce", "com_cev", "com_obj"]
SERIES_COLUMNS = ["step", "net_load_baseline_kw", "net_load_with_evs_kw", "comm_flow_kw"]


def _num(v) -> str:
    # adding 0.0 turns -0.0 into 0.0
    return repr(float(v) + 0.0)


@dataclass
class ReportBundle:
    rows: List[list]
    files: List[Path] = field(default_factory=list)


def cost_table(runs: Mapping[str, ScenarioRun]) -> List[list]:
    """Per-building rows plus a total row; EV columns carry the revenue as a negative cost."""
    for mode in MODES:
        if mode not in runs:
            raise ModeMissing(f"cost table needs a {mode!r} run")
    base, ind, com = (runs[m] for m in MODES)
    rows = []
    for bid in base.costs:
        b, i, c = base.costs[bid], ind.costs[bid], com.costs[bid]
        rows.append([bid, b.electricity_cost,
                     i.electricity_cost, -i.ev_revenue, i.objective,
                     c.electricity_cost, -c.ev_revenue, c.objective])
    totals = ["total"] + [sum(r[k] for r in rows) for k in range(1, len(COST_COLUMNS))]
    rows.append(totals)
    return rows


def format_table(rows: List[list]) -> str:
    head = ["Building", "Base C_E", "Ind C_E", "Ind C_EV", "Ind Obj",
            "Com C_E", "Com C_EV", "Com Obj"]
    width = [max(8, len(h)) for h in head]
    lines = ["  ".join(h.rjust(w) for h, w in zip(head, width))]
    for r in rows:
        if r[0] == "total":
            lines.append("-" * len(lines[0]))
        cells = [str(r[0]).rjust(width[0])]
        cells += [f"{v:.1f}".rjust(w) for v, w in zip(r[1:], width[1:])]
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


def emit_cost_table(runs: Mapping[str, ScenarioRun], out_dir) -> ReportBundle:
    """Write ``cost_table.csv`` (full precision) and ``cost_table.txt`` (0.1 €)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = cost_table(runs)
    csv_path = out / "cost_table.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COST_COLUMNS)
        for r in rows:
            w.writerow([r[0]] + [_num(v) for v in r[1:]])
    txt_path = out / "cost_table.txt"
    txt_path.write_text(format_table(rows))
    return ReportBundle(rows, [csv_path, txt_path])


def emit_mode_costs(run: ScenarioRun, out_dir) -> Path:
    """Per-building costs of a single mode: ``costs_<mode>.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"costs_{run.mode}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["building", "ce", "cev", "obj"])
        for bid, c in run.costs.items():
            w.writerow([bid, _num(c.electricity_cost), _num(-c.ev_revenue), _num(c.objective)])
        w.writerow(["total", _num(run.electricity_cost), _num(-run.ev_revenue), _num(run.objective)])
    return path


def emit_series(run: ScenarioRun, scn: Scenario, out_dir) -> List[Path]:
    """One ``<mode>_<building>_series.csv`` per building.

    The with-EV net load excludes community exchange; ``comm_flow_kw`` is
    positive for export to the community.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sol = run.solution
    paths = []
    for b in scn.buildings:
        bid = b.building_id
        with_evs = b.net_load + ev_power(sol, bid)
        flow = sol.comm_export[bid] - sol.comm_import[bid]
        path = out / f"{run.mode}_{bid}_series.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SERIES_COLUMNS)
            for h in range(scn.grid.steps):
                w.writerow([h, _num(b.net_load[h]), _num(with_evs[h]), _num(flow[h])])
        paths.append(path)
    return paths
