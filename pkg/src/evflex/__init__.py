"""EV charging flexibility and surplus sharing in a community of buildings."""
from .core import (BuildingSeries, CostBreakdown, EVCost, EVRequest, ScheduleSolution,
                   TimeGrid, residual_series, used_period, validate_request)
from .scenario import (ScenarioConfig, ScenarioRun, build_scenario, generate_ev_population,
                       generate_net_load, run_scenario)
from .schedule import build_model, extract_solution, solve_schedule, verify_solution
from .tariffs import (CommunityTariffs, TariffBook, build_charging_tariff, build_grid_export,
                      build_grid_import, derive_community_tariffs, make_tariff_book)

__version__ = "0.1.0"
