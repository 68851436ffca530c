"""Scenario generation and the three management modes.

Defaults: four buildings and 30 EV profiles, six of which park at each
building.  Chargers are 10 kW at 93 % efficiency and EVs are present
between 8 h and 20 h.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import (BuildingSeries, CostBreakdown, EVRequest, ScheduleSolution,
                   TimeGrid, empty_solution, validate_request)
from .costs import building_costs
from .exceptions import (BadWindow, DimensionMismatch, GenerationExhausted,
                         InvalidRequest, MarketDominatedByGrid)
from .schedule import BuiltModel, build_model, solve_schedule
from .solver import SolveOptions
from .tariffs import (CommunityTariffs, TariffBook, derive_community_tariffs,
                      make_tariff_book, read_wholesale_csv)
from . import tariffs as _t

MODES = ("baseline", "individual", "community")
MAX_REDRAWS = 100


@dataclass(frozen=True)
class NetLoadShape:
    base: float
    peak: float
    surplus_depth: float = 0.0
    surplus_window: Tuple[float, float] = (11.0, 15.0)
    pv_peak: float = 0.0


# Four office-type buildings: b1 never in surplus, b4 deep midday surplus.
NET_LOAD_PRESETS = {
    "b1": NetLoadShape(base=35.0, peak=140.0, pv_peak=60.0),
    "b2": NetLoadShape(base=35.0, peak=150.0, surplus_depth=40.0, surplus_window=(11.0, 15.0)),
    "b3": NetLoadShape(base=50.0, peak=200.0, surplus_depth=25.0, surplus_window=(11.5, 14.5)),
    "b4": NetLoadShape(base=25.0, peak=110.0, surplus_depth=80.0, surplus_window=(10.0, 16.0)),
}


@dataclass(frozen=True)
class ScenarioConfig:
    n_buildings: int = 4
    evs_per_building: int = 6
    population_size: int = 30
    park_mean: float = 8.0
    park_sd: float = 1.0
    charge_mean: float = 2.0
    charge_sd: float = 0.5
    discharge_mean: float = 0.75
    discharge_sd: float = 0.25
    window_start: float = 8.0
    window_end: float = 20.0
    p_max: float = 10.0
    efficiency: float = 0.93
    rng_seed: int = 0
    dt: float = 0.25
    grid_import_avg: float = _t.GRID_IMPORT_AVG            # €/MWh
    wholesale_monthly_avg: float = _t.GRID_EXPORT / _t.EXPORT_SHARE  # €/MWh
    grid_use_fee: float = _t.GRID_USE_FEE                  # €/MWh
    parking: float = _t.PARKING                            # €/h
    flexibility_reward: float = _t.FLEXIBILITY_REWARD      # €/h
    charging_avg: float = _t.CHARGING_AVG                  # €/h
    discharging_reward: float = _t.DISCHARGING_REWARD      # €/h
    wholesale_file: str = ""
    net_load_dir: str = ""

    def __post_init__(self):
        for name in ("park_mean", "charge_mean", "discharge_mean", "p_max", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("park_sd", "charge_sd", "discharge_sd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} cannot be negative")
        if not 0 <= self.window_start < self.window_end <= 24:
            raise ValueError("EV window must lie within the day")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")
        if self.evs_per_building > self.population_size:
            raise ValueError("evs_per_building exceeds the population size")
        if self.n_buildings < 1:
            raise ValueError("need at least one building")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.day(self.dt)


def read_config(path) -> ScenarioConfig:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    types = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}
    values = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ValueError(f"{path}:{n}: unknown key {key!r}")
        kind = types[key]
        values[key] = int(val) if kind == "int" else float(val) if kind == "float" else val
    for key in ("wholesale_file", "net_load_dir"):
        if values.get(key) and not Path(values[key]).is_absolute():
            values[key] = str(Path(path).parent / values[key])
    return ScenarioConfig(**values)


def write_config(cfg: ScenarioConfig, path) -> None:
    lines = ["# scenario configuration (key = value)"]
    for f in dataclasses.fields(cfg):
        lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _draw(rng, mean, sd, ok):
    for _ in range(MAX_REDRAWS):
        v = rng.normal(mean, sd) if sd > 0 else mean
        if ok(v):
            return v
    raise GenerationExhausted(f"could not draw a valid value around {mean}")


def generate_ev_population(cfg: ScenarioConfig) -> List[EVRequest]:
    """Draw ``population_size`` EV profiles, reproducibly from ``rng_seed``.

    Periods are normal draws redrawn (not clipped) until positive, snapped
    to the grid and jointly feasible; arrivals are uniform over the steps
    that keep the stay inside the availability window.
    """
    grid = cfg.grid
    rng = np.random.default_rng(cfg.rng_seed)
    first = grid.step_of(cfg.window_start)
    last = grid.step_of(cfg.window_end)
    window = (last - first) * grid.dt
    population = []
    for n in range(cfg.population_size):
        for _ in range(MAX_REDRAWS):
            park = grid.snap(_draw(rng, cfg.park_mean, cfg.park_sd,
                                   lambda v: v > 0 and grid.snap(v) > 0 and grid.snap(v) <= window))
            charge = grid.snap(_draw(rng, cfg.charge_mean, cfg.charge_sd, lambda v: v > 0))
            discharge = grid.snap(_draw(rng, cfg.discharge_mean, cfg.discharge_sd, lambda v: v >= 0))
            steps = round(park / grid.dt)
            arrival = int(rng.integers(first, last - steps + 1))
            req = EVRequest(f"ev{n + 1:02d}", arrival, arrival + steps, park, charge,
                            discharge, cfg.p_max, cfg.p_max, cfg.efficiency)
            try:
                population.append(validate_request(req, grid))
                break
            except InvalidRequest:
                continue
        else:
            raise GenerationExhausted(f"profile {n + 1}: no feasible draw in {MAX_REDRAWS} attempts")
    return population


def assign_fleets(population: Sequence[EVRequest], building_ids: Sequence[str],
                  cfg: ScenarioConfig) -> Dict[str, List[EVRequest]]:
    """Pick ``evs_per_building`` distinct profiles per building."""
    rng = np.random.default_rng([cfg.rng_seed, 1])
    fleets = {}
    for bid in building_ids:
        idx = np.sort(rng.choice(len(population), cfg.evs_per_building, replace=False))
        fleets[bid] = [dataclasses.replace(population[i], ev_id=f"{bid}/{population[i].ev_id}")
                       for i in idx]
    return fleets


def _demand(t, base, peak):
    occ = np.where((t >= 7) & (t <= 21), 0.5 * (1 - np.cos(2 * np.pi * (t - 7) / 14)), 0.0)
    return base + (peak - base) * occ


def _sun(t, window):
    a, b = window
    c = (a + b) / 2
    half = (b - a) / 2 + 3.0
    u = np.clip((t - c) / half, -1, 1)
    return np.cos(np.pi / 2 * u) ** 2


def generate_net_load(grid: TimeGrid, base: float, peak: float, surplus_depth: float = 0.0,
                      surplus_window: Tuple[float, float] = (11.0, 15.0),
                      pv_peak: float = 0.0, building_id: str = "b") -> BuildingSeries:
    """Synthetic office net load: occupancy-shaped demand minus a PV bell.

    With ``surplus_depth > 0`` the PV peak is solved so the lowest value
    inside ``surplus_window`` is exactly ``-surplus_depth``; otherwise
    ``pv_peak`` is used as given and must not create a surplus.
    """
    a, b = surplus_window
    if not (grid.start <= a < b <= grid.start + grid.steps * grid.dt):
        raise BadWindow(f"surplus window {surplus_window} outside the horizon")
    if surplus_depth < 0 or base < 0 or peak < base:
        raise ValueError("need 0 <= base <= peak and a non-negative depth")
    t = grid.hours + grid.dt / 2
    demand = _demand(t, base, peak)
    sun = _sun(t, surplus_window)
    inside = (t >= a) & (t <= b)
    if not inside.any():
        raise BadWindow("surplus window contains no step")
    if surplus_depth > 0:
        # min over the window of demand - pv * sun is concave piecewise linear in pv
        lo, hi = 0.0, (demand[inside].max() + surplus_depth) / sun[inside].max()
        for _ in range(200):
            mid = (lo + hi) / 2
            if np.min(demand[inside] - mid * sun[inside]) > -surplus_depth:
                lo = mid
            else:
                hi = mid
        pv_peak = hi
    net = demand - pv_peak * sun
    if surplus_depth == 0 and net.min() < 0:
        raise ValueError("pv_peak creates a surplus; pass surplus_depth instead")
    return BuildingSeries(building_id, net)


def read_net_load_csv(path, grid: TimeGrid, building_id: str) -> BuildingSeries:
    values = np.full(grid.steps, np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["step", "net_load_kw"]:
            raise ValueError(f"{path}: expected header 'step,net_load_kw'")
        for row in reader:
            step = int(row["step"])
            if not 0 <= step < grid.steps:
                raise DimensionMismatch(f"{path}: step {step} outside the grid")
            values[step] = float(row["net_load_kw"])
    if np.isnan(values).any():
        raise DimensionMismatch(f"{path}: missing steps")
    return BuildingSeries(building_id, values)


def write_net_load_csv(b: BuildingSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "net_load_kw"])
        for i, v in enumerate(b.net_load):
            w.writerow([i, repr(float(v))])


@dataclass
class Scenario:
    grid: TimeGrid
    buildings: List[BuildingSeries]
    fleets: Dict[str, List[EVRequest]]
    tariffs: TariffBook
    community: CommunityTariffs


def building_ids(cfg: ScenarioConfig) -> List[str]:
    return [f"b{i + 1}" for i in range(cfg.n_buildings)]


def default_buildings(cfg: ScenarioConfig) -> List[BuildingSeries]:
    grid = cfg.grid
    presets = list(NET_LOAD_PRESETS.values())
    out = []
    for i, bid in enumerate(building_ids(cfg)):
        if cfg.net_load_dir:
            out.append(read_net_load_csv(Path(cfg.net_load_dir) / f"{bid}.csv", grid, bid))
            continue
        shape = presets[i % len(presets)]
        out.append(generate_net_load(grid, shape.base, shape.peak, shape.surplus_depth,
                                     shape.surplus_window, shape.pv_peak, bid))
    return out


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    grid = cfg.grid
    wholesale = read_wholesale_csv(cfg.wholesale_file, grid) if cfg.wholesale_file else None
    book = make_tariff_book(
        grid, wholesale, grid_import_avg=cfg.grid_import_avg,
        wholesale_monthly_avg=cfg.wholesale_monthly_avg, grid_use_fee=cfg.grid_use_fee,
        parking=cfg.parking, flexibility_reward=cfg.flexibility_reward,
        charging_avg=cfg.charging_avg, discharging_reward=cfg.discharging_reward)
    try:
        community = derive_community_tariffs(book)
    except MarketDominatedByGrid as exc:
        community = exc.tariffs
    buildings = default_buildings(cfg)
    population = generate_ev_population(cfg)
    fleets = assign_fleets(population, [b.building_id for b in buildings], cfg)
    return Scenario(grid, buildings, fleets, book, community)


@dataclass
class ScenarioRun:
    mode: str
    costs: Dict[str, CostBreakdown]
    solution: ScheduleSolution
    stats: Dict[str, float] = field(default_factory=dict)

    @property
    def electricity_cost(self) -> float:
        return sum(c.electricity_cost for c in self.costs.values())

    @property
    def ev_revenue(self) -> float:
        return sum(c.ev_revenue for c in self.costs.values())

    @property
    def objective(self) -> float:
        return sum(c.objective for c in self.costs.values())


def baseline_solution(scn: Scenario) -> ScheduleSolution:
    sol = empty_solution(scn.grid, scn.buildings)
    for b in scn.buildings:
        sol.costs[b.building_id] = building_costs(b.net_load, [], {}, {}, scn.tariffs, scn.grid)
    sol.objective = sol.best_bound = sol.total_objective
    return sol


def _merge(parts: Sequence[ScheduleSolution], grid: TimeGrid) -> ScheduleSolution:
    merged = ScheduleSolution(grid, {}, {}, {}, {}, {}, {}, status="optimal",
                              objective=0.0, best_bound=0.0)
    for p in parts:
        for name in ("charge", "discharge", "comm_export", "comm_import",
                     "grid_residual", "costs", "ev_building"):
            getattr(merged, name).update(getattr(p, name))
        merged.objective += p.objective
        merged.best_bound += p.best_bound
        merged.nodes += p.nodes
        if p.status != "optimal":
            merged.status = p.status
    return merged


def build_mode_models(scn: Scenario, mode: str) -> List[BuiltModel]:
    """The MILP(s) a mode solves: one per building, or one joint model."""
    if mode == "individual":
        return [build_model(scn.grid, [b], {b.building_id: scn.fleets[b.building_id]},
                            scn.tariffs, None) for b in scn.buildings]
    if mode == "community":
        return [build_model(scn.grid, scn.buildings, scn.fleets, scn.tariffs, scn.community)]
    raise ValueError(f"mode {mode!r} has no optimization model")


def run_scenario(scn: Scenario | ScenarioConfig, mode: str,
                 opts: SolveOptions = SolveOptions()) -> ScenarioRun:
    """Solve one management mode and return its per-building costs."""
    if isinstance(scn, ScenarioConfig):
        scn = build_scenario(scn)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if mode == "baseline":
        sol = baseline_solution(scn)
        return ScenarioRun(mode, dict(sol.costs), sol, {"nodes": 0, "binaries": 0})
    built = build_mode_models(scn, mode)
    parts = [solve_schedule(m, opts) for m in built]
    sol = _merge(parts, scn.grid)
    stats = {"nodes": sol.nodes,
             "binaries": sum(int(m.model.binaries.size) for m in built),
             "variables": sum(m.model.n_vars for m in built),
             "rows": sum(m.model.n_rows for m in built),
             "gap": abs(sol.objective - sol.best_bound) / max(1.0, abs(sol.objective))}
    return ScenarioRun(mode, dict(sol.costs), sol, stats)
