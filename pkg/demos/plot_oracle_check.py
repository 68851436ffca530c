"""
Checking the MILP against brute force
=====================================

Micro scenarios small enough to enumerate every full-power EV decision.
"""
import time

from evflex import build_model, solve_schedule
from evflex.oracle import micro_battery, oracle_enumerate

t0 = time.perf_counter()
worst = 0.0
for i, micro in enumerate(micro_battery(24)):
    ref = oracle_enumerate(micro, with_details=True)
    built = build_model(micro.grid, micro.buildings, micro.fleets, micro.tariffs,
                        micro.community)
    milp = solve_schedule(built).objective
    worst = max(worst, abs(milp - ref.objective) / max(1.0, abs(ref.objective)))
    print(f"{i:2d}  oracle {ref.objective:9.4f}  milp {milp:9.4f}  "
          f"({ref.evaluated} combinations, {ref.n_optimal} optimal)")
print(f"worst scaled difference {worst:.1e} in {time.perf_counter() - t0:.2f} s")
