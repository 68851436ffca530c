"""Cost accounting evaluated directly on power series.

These functions never look at a solver objective; they are the second,
independent route used to re-price every schedule.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .core import CostBreakdown, EVCost, EVRequest, TimeGrid
from .tariffs import CommunityTariffs, TariffBook


def ev_cost(req: EVRequest, charge, discharge, tariffs: TariffBook,
            grid: TimeGrid) -> EVCost:
    """Revenue of one EV for its building, split into the four tariff parts."""
    charge = np.asarray(charge, dtype=float)
    discharge = np.asarray(discharge, dtype=float)
    used_c = charge * grid.dt / req.p_charge_max
    if req.p_discharge_max > 0:
        used_d = discharge * grid.dt / req.p_discharge_max
    else:
        used_d = np.zeros_like(discharge)
    total_c = used_c.sum()
    total_d = used_d.sum()
    return EVCost(
        ev_id=req.ev_id,
        parking=req.t_park * tariffs.parking,
        flexibility=-(req.t_park - total_c - total_d) * tariffs.flexibility_reward,
        charging=float(used_c @ tariffs.charging),
        discharging=-total_d * tariffs.discharging_reward,
    )


def electricity_cost(residual, tariffs: TariffBook, grid: TimeGrid,
                     comm_export=None, comm_import=None,
                     community: Optional[CommunityTariffs] = None) -> float:
    """Daily electricity bill of a building from its signed grid residual (kW)."""
    r = np.asarray(residual, dtype=float)
    cost = np.maximum(r, 0) @ tariffs.grid_import - np.maximum(-r, 0).sum() * tariffs.grid_export_comp
    if community is not None:
        if comm_import is not None:
            cost += np.sum(comm_import) * community.import_price
        if comm_export is not None:
            cost -= np.sum(comm_export) * community.export_comp
    return float(cost * grid.dt)


def building_costs(residual, evs: Sequence[EVRequest], charge, discharge,
                   tariffs: TariffBook, grid: TimeGrid, comm_export=None,
                   comm_import=None,
                   community: Optional[CommunityTariffs] = None) -> CostBreakdown:
    """Cost breakdown of a building; ``charge``/``discharge`` map ev_id -> series."""
    per_ev = tuple(ev_cost(req, charge[req.ev_id], discharge[req.ev_id], tariffs, grid)
                   for req in evs)
    return CostBreakdown(
        electricity_cost=electricity_cost(residual, tariffs, grid, comm_export,
                                          comm_import, community),
        ev_revenue=float(sum(e.total for e in per_ev)),
        per_ev=per_ev,
    )
