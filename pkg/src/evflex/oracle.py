"""Brute-force reference optimum for micro scenarios.

Every EV decision per step is one of idle, full-power charge, full-power
discharge, or both at once; all combinations are enumerated, filtered by
the EV constraints, and priced with the cost functions in :mod:`costs`.
Community exchange is settled greedily per step: with building-uniform
prices each traded kWh changes the bill by the same amount, so the best
trade volume is either zero or ``min(total surplus, total deficit)``.

The enumeration is exact when full-power decisions suffice, i.e. when
requests and net loads are whole multiples of ``dt`` and ``p_max`` and
discharging EVs are lossless.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core import BuildingSeries, EVRequest, TimeGrid, validate_request
from .costs import ev_cost
from .exceptions import TooLarge
from .tariffs import CommunityTariffs, TariffBook

MAX_BUILDINGS = 2
MAX_STEPS = 8
_EPS = 1e-9


@dataclass(frozen=True)
class MicroScenario:
    grid: TimeGrid
    buildings: List[BuildingSeries]
    fleets: Dict[str, List[EVRequest]]
    tariffs: TariffBook
    community: Optional[CommunityTariffs] = None


@dataclass
class OracleResult:
    objective: float
    n_optimal: int
    best: Dict[str, np.ndarray]   # ev_id -> net EV power of one optimal schedule
    evaluated: int


def _aligned(req: EVRequest, grid: TimeGrid) -> bool:
    k = req.t_charge_req / grid.dt
    d = req.t_discharge_allow / grid.dt
    if abs(k - round(k)) > _EPS or abs(d - round(d)) > _EPS:
        return False
    if req.can_discharge and (req.efficiency != 1 or req.p_charge_max != req.p_discharge_max):
        return False
    return True


def ev_patterns(req: EVRequest, grid: TimeGrid):
    """All feasible full-power schedules of one EV as (charge, discharge) arrays."""
    steps = grid.steps
    w = len(req.window)
    if req.parking_only:
        z = np.zeros((1, steps))
        return z, z.copy()
    codes = 4 if req.can_discharge else 2
    pats = np.array(list(itertools.product(range(codes), repeat=w)), dtype=np.int8)
    c = (pats & 1).astype(float)
    d = ((pats >> 1) & 1).astype(float)
    energy = c.sum(1) * grid.dt * req.p_charge_max - d.sum(1) * grid.dt * req.p_discharge_max / req.efficiency
    ok = np.abs(energy - req.t_charge_req * req.p_charge_max) <= 1e-6
    ok &= d.sum(1) * grid.dt <= req.t_discharge_allow + _EPS
    ok &= np.all(np.cumsum(d, 1) <= np.cumsum(c, 1) + _EPS, axis=1)
    c, d = c[ok], d[ok]
    full_c = np.zeros((len(c), steps))
    full_d = np.zeros((len(c), steps))
    full_c[:, req.arrival_step:req.departure_step] = c * req.p_charge_max
    full_d[:, req.arrival_step:req.departure_step] = d * req.p_discharge_max
    return full_c, full_d


def _building_options(b: BuildingSeries, evs: Sequence[EVRequest], micro: MicroScenario):
    """Net-load options of one building and the EV revenue of each."""
    grid = micro.grid
    if not evs:
        return b.net_load[None, :], np.zeros(1), [None]
    (ev,) = evs
    c, d = ev_patterns(ev, grid)
    revenue = np.array([ev_cost(ev, ci, di, micro.tariffs, grid).total for ci, di in zip(c, d)])
    return b.net_load[None, :] + c - d, revenue, list(c - d)


def _step_costs(r, tariffs: TariffBook, community: Optional[CommunityTariffs], dt):
    """Electricity cost for residual arrays r of shape (..., buildings, steps)."""
    pos = np.maximum(r, 0)
    neg = np.maximum(-r, 0)
    cost = (pos * tariffs.grid_import).sum(axis=(-2, -1)) - neg.sum(axis=(-2, -1)) * tariffs.grid_export_comp
    if community is not None and r.shape[-2] > 1:
        gain = (community.import_price - tariffs.grid_import
                - community.export_comp + tariffs.grid_export_comp)
        traded = np.minimum(pos.sum(-2), neg.sum(-2))
        cost = cost + (traded * np.minimum(gain, 0)).sum(-1)
    return cost * dt


def oracle_enumerate(micro: MicroScenario, with_details: bool = False):
    """Minimum objective of a micro scenario by exhaustive enumeration.

    Raises TooLarge beyond 2 buildings, 8 steps or 1 EV per building, and
    ValueError for requests the enumeration cannot represent exactly.
    """
    grid = micro.grid
    if len(micro.buildings) > MAX_BUILDINGS or grid.steps > MAX_STEPS:
        raise TooLarge("oracle handles at most 2 buildings and 8 steps")
    fleets = {}
    for b in micro.buildings:
        evs = [validate_request(ev, grid) for ev in micro.fleets.get(b.building_id, [])]
        if len(evs) > 1:
            raise TooLarge("oracle handles at most one EV per building")
        for ev in evs:
            if not _aligned(ev, grid):
                raise ValueError(f"{ev.ev_id}: request not aligned to full-power steps")
        fleets[b.building_id] = evs

    options = [_building_options(b, fleets[b.building_id], micro) for b in micro.buildings]
    if len(options) == 1:
        (r1, rev1, p1), = options
        total = _step_costs(r1[:, None, :], micro.tariffs, micro.community, grid.dt) - rev1
        combos = [(i,) for i in range(len(total))]
    else:
        (r1, rev1, p1), (r2, rev2, p2) = options
        stacked = np.stack(np.broadcast_arrays(r1[:, None, :], r2[None, :, :]), axis=-2)
        total = (_step_costs(stacked, micro.tariffs, micro.community, grid.dt)
                 - rev1[:, None] - rev2[None, :])
        combos = list(itertools.product(range(len(r1)), range(len(r2))))
        total = total.ravel()
    best = float(total.min())
    if not with_details:
        return best
    hits = np.flatnonzero(total <= best + 1e-9 * max(1.0, abs(best)))
    chosen = combos[int(hits[0])]
    schedule = {}
    for b, (_, _, pats), i in zip(micro.buildings, options, chosen):
        for ev in fleets[b.building_id]:
            schedule[ev.ev_id] = pats[i]
    return OracleResult(best, int(hits.size), schedule, int(total.size))


def random_micro(rng: np.random.Generator, index: int = 0, community: bool = True,
                 p_max: float = 10.0) -> MicroScenario:
    """A random aligned micro scenario with net loads in whole multiples of ``p_max``."""
    dt = float(rng.choice([0.5, 1.0]))
    steps = int(rng.integers(4, MAX_STEPS + 1))
    grid = TimeGrid(steps=steps, dt=dt, start=10.0)
    n_b = int(rng.integers(1, MAX_BUILDINGS + 1))
    buildings, fleets = [], {}
    for k in range(n_b):
        bid = f"m{index}b{k + 1}"
        buildings.append(BuildingSeries(bid, p_max * rng.integers(-2, 3, steps).astype(float)))
        if rng.random() < 0.85:
            length = int(rng.integers(2, min(steps, 6) + 1))
            arrival = int(rng.integers(0, steps - length + 1))
            allow = int(rng.integers(0, 2)) if length >= 3 else 0
            k_req = int(rng.integers(1, max(2, length - 2 * allow) + 0))
            eff = 1.0 if allow else float(rng.choice([0.93, 1.0]))
            ev = EVRequest(f"{bid}/ev", arrival, arrival + length, length * dt, k_req * dt,
                           allow * dt, p_max, p_max, eff)
            fleets[bid] = [ev]
    gi = rng.uniform(0.06, 0.20, steps)
    tariffs = TariffBook(grid_import=gi, grid_export_comp=float(rng.choice([0.0358, 0.05])),
                         grid_use_fee=0.05, parking=0.5, flexibility_reward=0.5,
                         charging=gi / gi.mean() * 2.0 * rng.uniform(0.5, 1.5),
                         discharging_reward=float(rng.choice([1.0, 3.0])))
    comm = None
    if community:
        comm = CommunityTariffs(tariffs.grid_export_comp,
                                tariffs.grid_export_comp + tariffs.grid_use_fee)
    return MicroScenario(grid, buildings, fleets, tariffs, comm)


def micro_battery(n: int = 24, seed: int = 2024) -> List[MicroScenario]:
    """Fixed, reproducible set of micro scenarios alternating both market modes."""
    rng = np.random.default_rng(seed)
    return [random_micro(rng, i, community=(i % 3 != 2)) for i in range(n)]
