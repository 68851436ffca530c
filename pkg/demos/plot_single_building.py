"""
One building, one EV
====================

A single car parked 8:00-16:00 asks for two hours of charging and allows
45 minutes of discharging.  The building has a midday PV surplus and most
charging lands there.  The discharge allowance is spent early, alongside
charging: every discharged kWh must be recharged with losses, and that
recharge is billed to the owner at the charging tariff.
"""
import numpy as np

from evflex import (EVRequest, TimeGrid, build_model, generate_net_load,
                    make_tariff_book, solve_schedule)

grid = TimeGrid.day(0.25)
building = generate_net_load(grid, base=25, peak=110, surplus_depth=30,
                             surplus_window=(10, 15), building_id="office")
ev = EVRequest("car", grid.step_of(8), grid.step_of(16), t_park=8.0,
               t_charge_req=2.0, t_discharge_allow=0.75)
book = make_tariff_book(grid)

built = build_model(grid, [building], {"office": [ev]}, book)
sol = solve_schedule(built)

c, d = sol.charge["car"], sol.discharge["car"]
busy = np.flatnonzero(c + d)
print("charging/discharging steps:")
for h in busy:
    print(f"  {grid.hours[h]:5.2f} h  load {building.net_load[h]:7.1f} kW  "
          f"charge {c[h]:5.2f}  discharge {d[h]:5.2f}")

cost = sol.costs["office"]
print(f"electricity {cost.electricity_cost:.2f} EUR, EV revenue {cost.ev_revenue:.2f} EUR")
print("status", sol.status, "nodes", sol.nodes)
