"""Tariff construction and the community market prices.

Every tariff is stored as a non-negative magnitude; the direction of the
cash flow is fixed by the field name and applied only when costs are
assembled.  Energy prices are in €/kWh, EV service prices in €/h.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import TimeGrid
from .exceptions import (
    DimensionMismatch,
    MarketDominatedByGrid,
    NonPositiveInput,
    ZeroMeanInput,
    ZeroMeanWholesale,
)

# Default tariff levels (€/MWh and €/h).
GRID_IMPORT_AVG = 122.8
GRID_EXPORT = 35.8
GRID_USE_FEE = 50.0
PARKING = 0.5
FLEXIBILITY_REWARD = 0.5
DISCHARGING_REWARD = 3.0
CHARGING_AVG = 2.0
EXPORT_SHARE = 0.9


@dataclass(frozen=True)
class TariffBook:
    grid_import: np.ndarray          # €/kWh per step
    grid_export_comp: float          # €/kWh
    grid_use_fee: float              # €/kWh
    parking: float                   # €/h
    flexibility_reward: float        # €/h
    charging: np.ndarray             # €/h per step
    discharging_reward: float        # €/h

    def __post_init__(self):
        gi = np.asarray(self.grid_import, dtype=float)
        cc = np.asarray(self.charging, dtype=float)
        if gi.shape != cc.shape or gi.ndim != 1:
            raise DimensionMismatch("grid_import and charging series must match")
        if np.any(gi <= 0):
            raise NonPositiveInput("grid import tariff must be positive at every step")
        for name in ("grid_export_comp", "grid_use_fee", "parking",
                     "flexibility_reward", "discharging_reward"):
            if getattr(self, name) < 0:
                raise NonPositiveInput(f"{name} is a magnitude and cannot be negative")
        for arr in (gi, cc):
            arr.setflags(write=False)
        object.__setattr__(self, "grid_import", gi)
        object.__setattr__(self, "charging", cc)

    @property
    def steps(self) -> int:
        return self.grid_import.shape[0]


@dataclass(frozen=True)
class CommunityTariffs:
    export_comp: float   # €/kWh paid to a building exporting to the community
    import_price: float  # €/kWh paid by a building importing from it


def build_grid_import(wholesale, target_avg: float = GRID_IMPORT_AVG) -> np.ndarray:
    """Scale a wholesale profile (€/MWh) to a retail tariff with mean ``target_avg``.

    Returns €/kWh.
    """
    w = np.asarray(wholesale, dtype=float)
    mean = w.mean() if w.size else 0.0
    if not mean > 0:
        raise ZeroMeanWholesale("wholesale profile must have a positive mean")
    if not target_avg > 0:
        raise NonPositiveInput("target average must be positive")
    return w * (target_avg / mean) / 1000.0


def build_grid_export(wholesale_monthly_avg: float) -> float:
    """Flat export compensation magnitude, 90 % of the monthly wholesale mean."""
    if not wholesale_monthly_avg > 0:
        raise NonPositiveInput("monthly wholesale average must be positive")
    return EXPORT_SHARE * wholesale_monthly_avg / 1000.0


def build_charging_tariff(grid_import, target_avg: float = CHARGING_AVG) -> np.ndarray:
    """Charging price (€/h) following the grid import shape with daily mean ``target_avg``."""
    gi = np.asarray(grid_import, dtype=float)
    mean = gi.mean() if gi.size else 0.0
    if not mean > 0:
        raise ZeroMeanInput("grid import tariff must have a positive mean")
    return gi * (target_avg / mean)


def derive_community_tariffs(book: TariffBook, check: bool = True) -> CommunityTariffs:
    """Clear the community market at the export boundary.

    Export compensation equals the grid's, and the import price adds the
    grid-use fee on top of it.  With ``check`` set, raises
    MarketDominatedByGrid (carrying the tariffs) when the import price is
    above the grid import tariff at every step.
    """
    export = book.grid_export_comp
    tariffs = CommunityTariffs(export_comp=export, import_price=export + book.grid_use_fee)
    if check and tariffs.import_price > book.grid_import.max():
        raise MarketDominatedByGrid(
            f"community import price {tariffs.import_price:.4g} €/kWh exceeds "
            f"the grid tariff at every step", tariffs)
    return tariffs


def unattractive_steps(book: TariffBook, community: CommunityTariffs) -> np.ndarray:
    """Steps where importing from the community costs more than from the grid."""
    return np.flatnonzero(community.import_price > book.grid_import)


def default_wholesale_profile(grid: TimeGrid) -> np.ndarray:
    """Two-peak day shape (morning and evening peaks, midday trough), mean 1."""
    t = grid.hours + grid.dt / 2
    shape = (1.0
             + 0.25 * np.exp(-((t - 9.0) / 1.5) ** 2)
             + 0.35 * np.exp(-((t - 20.0) / 2.0) ** 2)
             - 0.30 * np.exp(-((t - 14.0) / 2.5) ** 2)
             - 0.15 * np.exp(-((t - 4.0) / 2.5) ** 2))
    return shape / shape.mean()


def make_tariff_book(grid: TimeGrid, wholesale=None, *,
                     grid_import_avg: float = GRID_IMPORT_AVG,
                     wholesale_monthly_avg: float = GRID_EXPORT / EXPORT_SHARE,
                     grid_use_fee: float = GRID_USE_FEE,
                     parking: float = PARKING,
                     flexibility_reward: float = FLEXIBILITY_REWARD,
                     charging_avg: float = CHARGING_AVG,
                     discharging_reward: float = DISCHARGING_REWARD) -> TariffBook:
    """Assemble a full book; energy inputs in €/MWh, EV prices in €/h."""
    if wholesale is None:
        wholesale = default_wholesale_profile(grid)
    wholesale = grid.check_series(wholesale, "wholesale profile")
    gi = build_grid_import(wholesale, grid_import_avg)
    return TariffBook(
        grid_import=gi,
        grid_export_comp=build_grid_export(wholesale_monthly_avg),
        grid_use_fee=grid_use_fee / 1000.0,
        parking=parking,
        flexibility_reward=flexibility_reward,
        charging=build_charging_tariff(gi, charging_avg),
        discharging_reward=discharging_reward,
    )


def read_wholesale_csv(path, grid: TimeGrid) -> np.ndarray:
    """Read a ``step,price_eur_mwh`` file into a per-step array."""
    prices = np.full(grid.steps, np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["step", "price_eur_mwh"]:
            raise ValueError(f"{path}: expected header 'step,price_eur_mwh'")
        for row in reader:
            step = int(row["step"])
            if not 0 <= step < grid.steps:
                raise DimensionMismatch(f"{path}: step {step} outside the grid")
            prices[step] = float(row["price_eur_mwh"])
    if np.isnan(prices).any():
        raise DimensionMismatch(f"{path}: missing steps")
    return prices


def write_wholesale_csv(path, prices) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "price_eur_mwh"])
        for i, p in enumerate(prices):
            w.writerow([i, repr(float(p))])
