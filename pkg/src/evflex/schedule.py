"""MILP formulation of the building/EV/community schedule.

Rows are tagged with the constraint family they encode:

========== ==========================================================
eq6        charge energy covers the request plus recharge of discharges
eq7a       total discharge within the owner's allowance
eq7b       cumulative discharge never ahead of cumulative charge
eq10       one community direction per building and step
eq11       community flow capped by the building's own imbalance
eq12       community exports and imports cancel at every step
balance    building power balance with grid and community
bigM-link  grid import/export exclusivity where prices would reward both
========== ==========================================================

Positivity of the requested periods (eq8) is enforced when requests are
validated; charger limits (eq9) are variable bounds.  Charging and
discharging in the same step are not mutually exclusive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import (BuildingSeries, EVRequest, ScheduleSolution, TimeGrid,
                   validate_request)
from .costs import building_costs
from .exceptions import BadBigM, DimensionMismatch, Infeasible, InconsistentSolution, LimitReached
from .solver import (GAP_REACHED, INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, EQ, GE, LE,
                     MipModel, SolveOptions, SolveResult, branch_and_bound)
from .tariffs import CommunityTariffs, TariffBook, unattractive_steps

TAGS = ("eq6", "eq7a", "eq7b", "eq8", "eq9", "eq10", "eq11", "eq12",
        "balance", "bigM-link")
BIG_M_MARGIN = 1.0
_SNAP = 1e-9


@dataclass
class VariableLayout:
    """Variable ids by (ev_id, step) and (building_id, step)."""

    charge: Dict[Tuple[str, int], int] = field(default_factory=dict)
    discharge: Dict[Tuple[str, int], int] = field(default_factory=dict)
    comm_export: Dict[Tuple[str, int], int] = field(default_factory=dict)
    comm_import: Dict[Tuple[str, int], int] = field(default_factory=dict)
    grid_import: Dict[Tuple[str, int], int] = field(default_factory=dict)
    grid_export: Dict[Tuple[str, int], int] = field(default_factory=dict)
    direction: Dict[Tuple[str, int], int] = field(default_factory=dict)
    grid_direction: Dict[Tuple[str, int], int] = field(default_factory=dict)

    def counts(self) -> Dict[str, int]:
        return {k: len(v) for k, v in vars(self).items()}


@dataclass
class BuiltModel:
    model: MipModel
    layout: VariableLayout
    grid: TimeGrid
    buildings: List[BuildingSeries]
    fleets: Dict[str, List[EVRequest]]
    tariffs: TariffBook
    community: Optional[CommunityTariffs]
    big_m: Dict[str, float]
    unattractive: np.ndarray

    @property
    def requests(self) -> Dict[str, EVRequest]:
        return {ev.ev_id: ev for evs in self.fleets.values() for ev in evs}


def default_big_m(b: BuildingSeries, evs: Sequence[EVRequest]) -> float:
    pmax = max([max(ev.p_charge_max, ev.p_discharge_max) for ev in evs], default=0.0)
    return float(np.max(np.abs(b.net_load), initial=0.0) + len(evs) * pmax + BIG_M_MARGIN)


def add_ev_block(model: MipModel, layout: VariableLayout, req: EVRequest,
                 grid: TimeGrid) -> None:
    """Power variables and eq6/eq7 rows of one (validated) request.

    Parking-only requests get no variables at all.
    """
    if req.parking_only:
        return
    dt = grid.dt
    c_ids = []
    d_ids = []
    for h in req.window:
        j = model.add_var(0.0, req.p_charge_max, name=f"c[{req.ev_id},{h}]")
        layout.charge[req.ev_id, h] = j
        c_ids.append(j)
        if req.can_discharge:
            j = model.add_var(0.0, req.p_discharge_max, name=f"d[{req.ev_id},{h}]")
            layout.discharge[req.ev_id, h] = j
            d_ids.append(j)

    balance = [(j, dt) for j in c_ids] + [(j, -dt / req.efficiency) for j in d_ids]
    model.add_row(balance, EQ, req.t_charge_req * req.p_charge_max, "eq6")
    if not d_ids:
        return
    model.add_row([(j, dt) for j in d_ids], LE,
                  req.t_discharge_allow * req.p_discharge_max, "eq7a")
    uc = dt / req.p_charge_max
    ud = dt / req.p_discharge_max
    for x in range(1, len(c_ids) + 1):
        row = [(j, ud) for j in d_ids[:x]] + [(j, -uc) for j in c_ids[:x]]
        model.add_row(row, LE, 0.0, "eq7b")


def _ev_terms(layout: VariableLayout, evs: Sequence[EVRequest], h: int):
    """(var, coef) pairs of net EV charging power at step h."""
    terms = []
    for ev in evs:
        if (ev.ev_id, h) in layout.charge:
            terms.append((layout.charge[ev.ev_id, h], 1.0))
        if (ev.ev_id, h) in layout.discharge:
            terms.append((layout.discharge[ev.ev_id, h], -1.0))
    return terms


def add_building_coupling(model: MipModel, layout: VariableLayout, b: BuildingSeries,
                          evs: Sequence[EVRequest], tariffs: TariffBook,
                          community: Optional[CommunityTariffs], big_m: float,
                          grid: TimeGrid) -> None:
    """Grid/community flow variables, power balance and direction logic.

    Without ``community`` the building trades with the grid only.
    """
    need = default_big_m(b, evs) - BIG_M_MARGIN
    if big_m < need:
        raise BadBigM(f"{b.building_id}: big-M {big_m} below the imbalance bound {need}")
    load = grid.check_series(b.net_load, f"{b.building_id} net load")
    bid = b.building_id
    for h in range(grid.steps):
        gi = model.add_var(name=f"gi[{bid},{h}]")
        ge = model.add_var(name=f"ge[{bid},{h}]")
        layout.grid_import[bid, h] = gi
        layout.grid_export[bid, h] = ge
        ev = _ev_terms(layout, evs, h)
        neg_ev = [(j, -v) for j, v in ev]
        row = [(gi, 1.0), (ge, -1.0)] + neg_ev
        if community is not None:
            ce = model.add_var(name=f"ce[{bid},{h}]")
            ci = model.add_var(name=f"ci[{bid},{h}]")
            d = model.add_var(binary=True, name=f"dir[{bid},{h}]")
            layout.comm_export[bid, h] = ce
            layout.comm_import[bid, h] = ci
            layout.direction[bid, h] = d
            row += [(ce, -1.0), (ci, 1.0)]
            model.add_row([(ce, 1.0), (d, -big_m)], LE, 0.0, "eq10")
            model.add_row([(ci, 1.0), (d, big_m)], LE, big_m, "eq10")
            # export <= -(L + ev) + M (1 - d);  import <= (L + ev) + M d
            model.add_row([(ce, 1.0), (d, big_m)] + ev, LE, -load[h] + big_m, "eq11")
            model.add_row([(ci, 1.0), (d, -big_m)] + neg_ev, LE, load[h], "eq11")
        model.add_row(row, EQ, load[h], "balance")
        if tariffs.grid_import[h] <= tariffs.grid_export_comp:
            m2 = 2 * big_m
            g = model.add_var(binary=True, name=f"gdir[{bid},{h}]")
            layout.grid_direction[bid, h] = g
            model.add_row([(gi, 1.0), (g, -m2)], LE, 0.0, "bigM-link")
            model.add_row([(ge, 1.0), (g, m2)], LE, m2, "bigM-link")


def add_community_balance(model: MipModel, layout: VariableLayout,
                          buildings: Sequence[BuildingSeries], grid: TimeGrid) -> None:
    for h in range(grid.steps):
        row = []
        for b in buildings:
            row.append((layout.comm_export[b.building_id, h], 1.0))
            row.append((layout.comm_import[b.building_id, h], -1.0))
        model.add_row(row, EQ, 0.0, "eq12")


def build_objective(model: MipModel, layout: VariableLayout,
                    fleets: Mapping[str, Sequence[EVRequest]], tariffs: TariffBook,
                    community: Optional[CommunityTariffs], grid: TimeGrid) -> None:
    """Electricity cost minus EV revenue, summed over buildings."""
    dt = grid.dt
    for (bid, h), j in layout.grid_import.items():
        model.add_obj(j, dt * tariffs.grid_import[h])
    for (bid, h), j in layout.grid_export.items():
        model.add_obj(j, -dt * tariffs.grid_export_comp)
    if community is not None:
        for j in layout.comm_import.values():
            model.add_obj(j, dt * community.import_price)
        for j in layout.comm_export.values():
            model.add_obj(j, -dt * community.export_comp)

    flex = tariffs.flexibility_reward
    for evs in fleets.values():
        for ev in evs:
            # parking fee and the flexibility reward for an idle stay are constant
            model.obj_const -= ev.t_park * tariffs.parking - ev.t_park * flex
            uc = dt / ev.p_charge_max
            for h in ev.window:
                if (ev.ev_id, h) in layout.charge:
                    model.add_obj(layout.charge[ev.ev_id, h],
                                  -uc * (tariffs.charging[h] + flex))
                if (ev.ev_id, h) in layout.discharge:
                    ud = dt / ev.p_discharge_max
                    model.add_obj(layout.discharge[ev.ev_id, h],
                                  -ud * (flex - tariffs.discharging_reward))


def build_model(grid: TimeGrid, buildings: Sequence[BuildingSeries],
                fleets: Mapping[str, Sequence[EVRequest]], tariffs: TariffBook,
                community: Optional[CommunityTariffs] = None,
                big_m: Optional[Mapping[str, float]] = None) -> BuiltModel:
    """Assemble the full model; ``community=None`` gives independent buildings."""
    if tariffs.steps != grid.steps:
        raise DimensionMismatch("tariff series do not match the time grid")
    ids = [b.building_id for b in buildings]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate building ids")
    checked = {bid: [validate_request(ev, grid) for ev in fleets.get(bid, [])]
               for bid in ids}
    ev_ids = [ev.ev_id for evs in checked.values() for ev in evs]
    if len(set(ev_ids)) != len(ev_ids):
        raise ValueError("duplicate EV ids")

    model = MipModel()
    layout = VariableLayout()
    for bid in ids:
        for ev in checked[bid]:
            add_ev_block(model, layout, ev, grid)
    bigm = {}
    for b in buildings:
        bigm[b.building_id] = (big_m or {}).get(b.building_id) or default_big_m(b, checked[b.building_id])
        add_building_coupling(model, layout, b, checked[b.building_id], tariffs,
                              community, bigm[b.building_id], grid)
    if community is not None:
        add_community_balance(model, layout, buildings, grid)
    build_objective(model, layout, checked, tariffs, community, grid)
    bad = unattractive_steps(tariffs, community) if community else np.zeros(0, dtype=int)
    return BuiltModel(model, layout, grid, list(buildings), checked, tariffs,
                      community, bigm, bad)


def direction_heuristic(built: BuiltModel):
    """Round direction binaries by the sign of each building's imbalance.

    The imbalance is read from the EV powers of the LP point; zero community
    flow with these directions is always feasible, so the fixed LP is too
    unless a grid direction binary gets in the way.
    """
    lay = built.layout
    load = {b.building_id: b.net_load for b in built.buildings}
    ev_terms = {(b.building_id, h): _ev_terms(lay, built.fleets[b.building_id], h)
                for b in built.buildings for h in range(built.grid.steps)}

    def guess(x):
        out = {}
        for (bid, h), j in lay.direction.items():
            imb = load[bid][h] + sum(v * x[k] for k, v in ev_terms[bid, h])
            out[j] = 1.0 if imb < 0 else 0.0
        for (bid, h), j in lay.grid_direction.items():
            out[j] = 1.0 if x[lay.grid_import[bid, h]] >= x[lay.grid_export[bid, h]] else 0.0
        return out

    return guess


def _series(x, ids: Mapping[Tuple[str, int], int], key: str, steps: int) -> np.ndarray:
    out = np.zeros(steps)
    for (k, h), j in ids.items():
        if k == key:
            out[h] = x[j]
    out[np.abs(out) < _SNAP] = 0.0
    return out


def extract_solution(built: BuiltModel, x, result: Optional[SolveResult] = None,
                     tol: float = 1e-6) -> ScheduleSolution:
    """Turn a solver assignment into a schedule and re-price it from scratch.

    Raises InconsistentSolution when a row is violated or the re-priced cost
    disagrees with the model objective beyond ``tol`` (relative).
    """
    x = np.asarray(x, dtype=float)
    model = built.model
    bad = model.violations(x, tol)
    if bad:
        i, tag, amount = max(bad, key=lambda v: v[2])
        raise InconsistentSolution(f"{len(bad)} violated rows, worst {tag} #{i} by {amount:.3g}")
    grid, lay = built.grid, built.layout
    steps = grid.steps
    charge, discharge, ev_building = {}, {}, {}
    for bid, evs in built.fleets.items():
        for ev in evs:
            charge[ev.ev_id] = _series(x, lay.charge, ev.ev_id, steps)
            discharge[ev.ev_id] = _series(x, lay.discharge, ev.ev_id, steps)
            ev_building[ev.ev_id] = bid
    ce, ci, resid, costs = {}, {}, {}, {}
    for b in built.buildings:
        bid = b.building_id
        ce[bid] = _series(x, lay.comm_export, bid, steps)
        ci[bid] = _series(x, lay.comm_import, bid, steps)
        net_ev = sum((charge[ev.ev_id] - discharge[ev.ev_id] for ev in built.fleets[bid]),
                     np.zeros(steps))
        resid[bid] = b.net_load + net_ev + ce[bid] - ci[bid]
        costs[bid] = building_costs(resid[bid], built.fleets[bid], charge, discharge,
                                    built.tariffs, grid, ce[bid], ci[bid], built.community)

    repriced = sum(c.objective for c in costs.values())
    reported = model.objective_value(x)
    if abs(repriced - reported) > tol * max(1.0, abs(reported)):
        raise InconsistentSolution(
            f"re-priced objective {repriced:.9g} differs from model objective {reported:.9g}")
    status = "optimal"
    bound = reported
    nodes = 0
    if result is not None:
        status = {OPTIMAL: "optimal", GAP_REACHED: "feasible-with-gap"}.get(result.status, result.status)
        bound = result.best_bound
        nodes = result.nodes
    return ScheduleSolution(grid=grid, charge=charge, discharge=discharge,
                            comm_export=ce, comm_import=ci, grid_residual=resid,
                            costs=costs, status=status, objective=reported,
                            best_bound=bound, nodes=nodes, ev_building=ev_building)


def _infeasible_tag(built: BuiltModel) -> str:
    """Name the first constraint family whose removal restores LP feasibility."""
    from .solver import solve_lp
    from .solver.model import relaxed
    for tag in ("eq6", "eq7b", "eq7a", "eq11", "eq12", "eq10", "balance"):
        m = relaxed(built.model)
        m.rows = [r for r in m.rows if r.tag != tag]
        if solve_lp(m).status != INFEASIBLE:
            return tag
    return "unknown"


def solve_schedule(built: BuiltModel, opts: SolveOptions = SolveOptions()) -> ScheduleSolution:
    res = branch_and_bound(built.model, opts, heuristic=direction_heuristic(built))
    if res.status == INFEASIBLE:
        tag = _infeasible_tag(built)
        raise Infeasible(f"schedule model is infeasible (violating family: {tag})", tag)
    if res.status == UNBOUNDED:
        raise Infeasible("schedule model is unbounded", "unbounded")
    if res.status == LIMIT:
        raise LimitReached("no feasible schedule found within the limits", res)
    return extract_solution(built, res.x, res)


def verify_solution(sol: ScheduleSolution, buildings: Sequence[BuildingSeries],
                    fleets: Mapping[str, Sequence[EVRequest]]) -> List[str]:
    """Check a schedule against every constraint family; returns violations."""
    grid = sol.grid
    dt = grid.dt
    problems = []
    for bid, evs in fleets.items():
        for ev in evs:
            c, d = sol.charge[ev.ev_id], sol.discharge[ev.ev_id]
            outside = np.ones(grid.steps, dtype=bool)
            outside[ev.arrival_step:ev.departure_step] = False
            if np.any(c[outside] != 0) or np.any(d[outside] != 0):
                problems.append(f"{ev.ev_id}: power outside the parking window")
            if c.min() < 0 or c.max() > ev.p_charge_max + 1e-9 or d.min() < 0 \
                    or d.max() > ev.p_discharge_max + 1e-9:
                problems.append(f"{ev.ev_id}: eq9 power bounds")
            if ev.parking_only:
                if c.any() or d.any():
                    problems.append(f"{ev.ev_id}: parking-only EV has power")
                continue
            gap = c.sum() * dt - ev.t_charge_req * ev.p_charge_max - d.sum() * dt / ev.efficiency
            if abs(gap) > 1e-6:
                problems.append(f"{ev.ev_id}: eq6 energy balance off by {gap:.3g} kWh")
            if d.sum() * dt > ev.t_discharge_allow * ev.p_discharge_max + 1e-6:
                problems.append(f"{ev.ev_id}: eq7a discharge allowance exceeded")
            if ev.p_discharge_max > 0:
                lead = np.cumsum(d * dt / ev.p_discharge_max) - np.cumsum(c * dt / ev.p_charge_max)
                if lead.max() > 1e-9:
                    problems.append(f"{ev.ev_id}: eq7b prefix dominance by {lead.max():.3g} h")
    net = np.zeros(grid.steps)
    for b in buildings:
        bid = b.building_id
        ce, ci = sol.comm_export[bid], sol.comm_import[bid]
        if ce.min() < 0 or ci.min() < 0:
            problems.append(f"{bid}: negative community flow")
        if np.max(ce * ci) > 1e-9:
            problems.append(f"{bid}: eq10 simultaneous export and import")
        imb = b.net_load + sum((sol.charge[ev.ev_id] - sol.discharge[ev.ev_id]
                                for ev in fleets.get(bid, [])), np.zeros(grid.steps))
        if np.any(ce > np.maximum(-imb, 0) + 1e-6) or np.any(ci > np.maximum(imb, 0) + 1e-6):
            problems.append(f"{bid}: eq11 community flow above the imbalance")
        net += ce - ci
    if np.abs(net).max(initial=0.0) > 1e-6:
        problems.append(f"eq12 community flows do not cancel (max {np.abs(net).max():.3g} kW)")
    return problems
