"""
Individual versus community management
======================================

Four synthetic buildings with six EVs each, solved three ways: without EVs,
each building on its own, and jointly with surplus sharing.
"""
from evflex.scenario import MODES, ScenarioConfig, build_scenario, run_scenario
from evflex.report import cost_table, format_table

cfg = ScenarioConfig(rng_seed=7)
scn = build_scenario(cfg)
runs = {mode: run_scenario(scn, mode) for mode in MODES}
print(format_table(cost_table(runs)))

base = runs["baseline"].electricity_cost
for mode in ("individual", "community"):
    r = runs[mode]
    print(f"{mode:10s}  objective {r.objective:7.1f} EUR  "
          f"saving vs baseline {100 * (1 - r.objective / base):4.1f} %")

# who trades with whom at 13:00
h = scn.grid.step_of(13)
sol = runs["community"].solution
for b in scn.buildings:
    flow = sol.comm_export[b.building_id][h] - sol.comm_import[b.building_id][h]
    print(f"{b.building_id}: net load {b.net_load[h]:7.1f} kW, community flow {flow:+6.1f} kW")
