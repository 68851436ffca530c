"""Domain types shared by every stage of the scheduler.

Sign conventions used throughout the package:

* net load is positive when demand exceeds on-site generation (deficit) and
  negative when there is a generation surplus;
* every EV and community power quantity is a non-negative magnitude, the
  direction being encoded by which variable carries it;
* ``grid_residual`` is the only signed power series (positive = import).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import (
    DimensionMismatch,
    DomainError,
    InfeasibleRequest,
    NegativePeriod,
    WindowOutOfRange,
)

_TOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """A single-day discretization: ``steps`` slots of ``dt`` hours from ``start``."""

    steps: int = 96
    dt: float = 0.25
    start: float = 0.0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.steps * self.dt > 24 + _TOL:
            raise ValueError("horizon longer than one day")

    @classmethod
    def day(cls, dt: float = 0.25) -> "TimeGrid":
        steps = round(24 / dt)
        if abs(steps * dt - 24) > _TOL:
            raise ValueError(f"dt={dt} does not divide 24 h")
        return cls(steps=steps, dt=dt)

    @property
    def hours(self) -> np.ndarray:
        """Wall-clock hour at the start of every step."""
        return self.start + self.dt * np.arange(self.steps)

    def step_of(self, hour: float) -> int:
        return int(math.floor((hour - self.start) / self.dt + 0.5))

    def snap(self, hours: float) -> float:
        """Round a duration to the nearest multiple of dt, halves going up."""
        return math.floor(hours / self.dt + 0.5) * self.dt

    def check_series(self, values, name: str = "series") -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.steps,):
            raise DimensionMismatch(
                f"{name} has shape {arr.shape}, expected ({self.steps},)")
        return arr


@dataclass(frozen=True)
class EVRequest:
    """What an EV owner submits on arrival.

    Periods are in hours at maximum charger power; ``arrival_step`` and
    ``departure_step`` index a :class:`TimeGrid`, the EV being parked during
    ``[arrival_step, departure_step)``.
    """

    ev_id: str
    arrival_step: int
    departure_step: int
    t_park: float
    t_charge_req: float
    t_discharge_allow: float
    p_charge_max: float = 10.0
    p_discharge_max: float = 10.0
    efficiency: float = 0.93

    @property
    def window(self) -> range:
        return range(self.arrival_step, self.departure_step)

    @property
    def parking_only(self) -> bool:
        return self.t_charge_req == 0

    @property
    def can_discharge(self) -> bool:
        return (not self.parking_only and self.t_discharge_allow > 0
                and self.p_discharge_max > 0)

    def required_hours(self) -> float:
        return self.t_charge_req + self.t_discharge_allow * (1 + 1 / self.efficiency)


def validate_request(req: EVRequest, grid: TimeGrid) -> EVRequest:
    """Check a request against its grid and return it with snapped periods.

    Raises NegativePeriod, WindowOutOfRange or InfeasibleRequest.
    """
    if not req.t_park > 0:
        raise NegativePeriod(f"{req.ev_id}: parking period must be positive")
    if req.t_charge_req < 0 or req.t_discharge_allow < 0:
        raise NegativePeriod(f"{req.ev_id}: requested periods cannot be negative")
    if not (0 <= req.arrival_step < req.departure_step <= grid.steps):
        raise WindowOutOfRange(
            f"{req.ev_id}: window [{req.arrival_step}, {req.departure_step}) "
            f"outside [0, {grid.steps})")
    if not 0 < req.efficiency <= 1:
        raise DomainError(f"{req.ev_id}: efficiency must lie in (0, 1]")
    if not req.p_charge_max > 0 or req.p_discharge_max < 0:
        raise DomainError(f"{req.ev_id}: invalid charger power limits")
    window_hours = (req.departure_step - req.arrival_step) * grid.dt
    if abs(window_hours - req.t_park) > _TOL:
        raise InfeasibleRequest(
            f"{req.ev_id}: t_park={req.t_park} h but window spans {window_hours} h")

    snapped = replace(req,
                      t_charge_req=grid.snap(req.t_charge_req),
                      t_discharge_allow=grid.snap(req.t_discharge_allow))
    if snapped.required_hours() > snapped.t_park + _TOL:
        raise InfeasibleRequest(
            f"{req.ev_id}: needs {snapped.required_hours():.4g} h of charger "
            f"time but is parked {snapped.t_park} h")
    return snapped


def used_period(power: float, p_max: float, dt: float) -> float:
    """Hours at maximum power equivalent to running at ``power`` for ``dt``."""
    if not p_max > 0:
        raise DomainError("p_max must be positive")
    if power < -_TOL or power > p_max * (1 + _TOL) + _TOL:
        raise DomainError(f"power {power} outside [0, {p_max}]")
    return power * dt / p_max


@dataclass(frozen=True)
class BuildingSeries:
    building_id: str
    net_load: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.net_load, dtype=float)
        if arr.ndim != 1:
            raise DimensionMismatch("net load must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{self.building_id}: net load has non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "net_load", arr)


@dataclass(frozen=True)
class EVCost:
    """Revenue one EV brings to its building, split by tariff component (€)."""

    ev_id: str
    parking: float
    flexibility: float
    charging: float
    discharging: float

    @property
    def total(self) -> float:
        return self.parking + self.flexibility + self.charging + self.discharging


@dataclass(frozen=True)
class CostBreakdown:
    electricity_cost: float
    ev_revenue: float
    per_ev: Tuple[EVCost, ...] = ()

    @property
    def objective(self) -> float:
        return self.electricity_cost - self.ev_revenue


@dataclass
class ScheduleSolution:
    """Optimized power schedule and its cost accounting.

    Power series are full-horizon arrays keyed by EV or building id.
    """

    grid: TimeGrid
    charge: Dict[str, np.ndarray]
    discharge: Dict[str, np.ndarray]
    comm_export: Dict[str, np.ndarray]
    comm_import: Dict[str, np.ndarray]
    grid_residual: Dict[str, np.ndarray]
    costs: Dict[str, CostBreakdown]
    status: str = "optimal"
    objective: float = float("nan")
    best_bound: float = float("nan")
    nodes: int = 0
    ev_building: Dict[str, str] = field(default_factory=dict)

    def evs_of(self, building_id: str) -> List[str]:
        return [ev for ev, b in self.ev_building.items() if b == building_id]

    def used_charge(self, req: EVRequest) -> np.ndarray:
        return self.charge[req.ev_id] * self.grid.dt / req.p_charge_max

    def used_discharge(self, req: EVRequest) -> np.ndarray:
        if req.p_discharge_max == 0:
            return np.zeros(self.grid.steps)
        return self.discharge[req.ev_id] * self.grid.dt / req.p_discharge_max

    @property
    def total_objective(self) -> float:
        return sum(c.objective for c in self.costs.values())


def ev_power(sol: ScheduleSolution, building_id: str) -> np.ndarray:
    """Net EV charging power (charge minus discharge) of one building."""
    total = np.zeros(sol.grid.steps)
    for ev in sol.evs_of(building_id):
        total += sol.charge[ev] - sol.discharge[ev]
    return total


def residual_series(b: BuildingSeries, sol: ScheduleSolution) -> np.ndarray:
    """Power the building exchanges with the grid, positive for import.

    Community exports are drawn from the surplus that would otherwise reach
    the grid, so they raise the residual; community imports lower it.
    """
    load = sol.grid.check_series(b.net_load, f"{b.building_id} net load")
    bid = b.building_id
    ce = sol.grid.check_series(sol.comm_export.get(bid, np.zeros(sol.grid.steps)))
    ci = sol.grid.check_series(sol.comm_import.get(bid, np.zeros(sol.grid.steps)))
    return load + ev_power(sol, bid) + ce - ci


def empty_solution(grid: TimeGrid, buildings: Sequence[BuildingSeries],
                   fleets: Optional[Dict[str, Sequence[EVRequest]]] = None) -> ScheduleSolution:
    """All-zero schedule, handy for baselines and hand-built test cases."""
    fleets = fleets or {}
    zeros = lambda: np.zeros(grid.steps)
    ev_building = {ev.ev_id: bid for bid, evs in fleets.items() for ev in evs}
    return ScheduleSolution(
        grid=grid,
        charge={ev: zeros() for ev in ev_building},
        discharge={ev: zeros() for ev in ev_building},
        comm_export={b.building_id: zeros() for b in buildings},
        comm_import={b.building_id: zeros() for b in buildings},
        grid_residual={b.building_id: grid.check_series(b.net_load).copy()
                       for b in buildings},
        costs={},
        ev_building=ev_building,
    )
