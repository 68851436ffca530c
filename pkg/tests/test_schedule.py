import numpy as np
import pytest

from evflex.core import BuildingSeries, EVRequest, TimeGrid
from evflex.costs import ev_cost
from evflex.exceptions import BadBigM, Infeasible, InconsistentSolution
from evflex.oracle import micro_battery
from evflex.schedule import (TAGS, build_model, default_big_m, extract_solution,
                             solve_schedule, verify_solution)
from evflex.solver import EQ, SolveOptions
from evflex.tariffs import CommunityTariffs, TariffBook, derive_community_tariffs

DAY = TimeGrid.day(0.25)


def flat_book(grid, gi=0.12, charging=2.0):
    return TariffBook(np.full(grid.steps, gi), 0.0358, 0.05, 0.5, 0.5,
                      np.full(grid.steps, charging), 3.0)


def default_ev(ev_id="ev", discharge=0.75, eff=0.93):
    return EVRequest(ev_id, 32, 64, 8.0, 2.0, discharge, 10.0, 10.0, eff)


def assignment(built, **flows):
    """Assignment vector from {layout_name: {(key, step): value}}."""
    x = np.zeros(built.model.n_vars)
    for name, values in flows.items():
        ids = getattr(built.layout, name)
        for key, v in values.items():
            x[ids[key]] = v
    return x


def tags(built, x):
    return {tag for _, tag, _ in built.model.violations(x, 1e-7)}


class TestEvBlock:
    def test_energy_balance_row(self):
        grid = DAY
        b = BuildingSeries("b", np.zeros(grid.steps))
        built = build_model(grid, [b], {"b": [default_ev()]}, flat_book(grid))
        (row,) = [r for r in built.model.rows if r.tag == "eq6"]
        assert row.sense == EQ and row.rhs == pytest.approx(20.0)
        coefs = dict(zip(row.cols, row.vals))
        c0 = built.layout.charge["ev", 32]
        d0 = built.layout.discharge["ev", 32]
        assert coefs[c0] == 0.25 and coefs[d0] == pytest.approx(-0.25 / 0.93)
        assert len(built.layout.charge) == 32 and built.model.tag_counts()["eq7b"] == 32

    def test_no_discharge_reduces_balance(self):
        b = BuildingSeries("b", np.zeros(DAY.steps))
        built = build_model(DAY, [b], {"b": [default_ev(discharge=0.0)]}, flat_book(DAY))
        assert not built.layout.discharge
        assert "eq7a" not in built.model.tag_counts()
        (row,) = [r for r in built.model.rows if r.tag == "eq6"]
        assert row.rhs == pytest.approx(20.0) and all(v == 0.25 for v in row.vals)

    def test_discharge_before_charge_violates_prefix(self):
        grid = TimeGrid(4, 1.0)
        ev = EVRequest("ev", 0, 4, 4.0, 1.0, 1.0, 10, 10, 1.0)
        b = BuildingSeries("b", np.zeros(4))
        built = build_model(grid, [b], {"b": [ev]}, flat_book(grid))
        x = assignment(built, charge={("ev", 1): 10, ("ev", 2): 10},
                       discharge={("ev", 0): 10}, grid_import={("b", 1): 10, ("b", 2): 10},
                       grid_export={("b", 0): 10})
        assert tags(built, x) == {"eq7b"}
        x = assignment(built, charge={("ev", 0): 10, ("ev", 1): 10},
                       discharge={("ev", 2): 10}, grid_import={("b", 0): 10, ("b", 1): 10},
                       grid_export={("b", 2): 10})
        assert not tags(built, x)

    def test_parking_only_has_no_variables(self):
        ev = EVRequest("ev", 32, 64, 8.0, 0.0, 0.0)
        b = BuildingSeries("b", np.full(DAY.steps, 5.0))
        built = build_model(DAY, [b], {"b": [ev]}, flat_book(DAY))
        assert not built.layout.charge
        sol = solve_schedule(built)
        # parking 4 € minus 8 idle hours of flexibility reward
        assert sol.costs["b"].ev_revenue == pytest.approx(0.0)


class TestEvCost:
    def test_charge_only(self):
        ev = default_ev(discharge=0.0)
        c = np.zeros(DAY.steps)
        c[32:40] = 10
        cost = ev_cost(ev, c, np.zeros(DAY.steps), flat_book(DAY), DAY)
        assert cost.total == pytest.approx(5.0, abs=1e-12)
        assert (cost.parking, cost.flexibility, cost.charging) == pytest.approx((4, -3, 4))

    def test_full_discharge(self):
        ev = default_ev()
        c = np.zeros(DAY.steps)
        d = np.zeros(DAY.steps)
        energy = 20 + 7.5 / 0.93
        c[32:43] = 10
        c[43] = (energy - 27.5) * 4
        d[50:53] = 10
        cost = ev_cost(ev, c, d, flat_book(DAY), DAY)
        assert c.sum() * 0.25 / 10 == pytest.approx(2.8065, abs=1e-4)
        assert cost.total == pytest.approx(5.141, abs=1e-3)

    def test_model_objective_matches_cost(self):
        b = BuildingSeries("b", np.zeros(DAY.steps))
        sol = solve_schedule(build_model(DAY, [b], {"b": [default_ev(discharge=0.0)]},
                                         flat_book(DAY)))
        # flat tariffs: 20 kWh from the grid at 0.12 and 5 € of EV revenue
        assert sol.objective == pytest.approx(20 * 0.12 - 5.0, abs=1e-9)


class TestCoupling:
    def _single(self, load, community=True):
        grid = TimeGrid(1, 1.0)
        book = flat_book(grid)
        b = BuildingSeries("b", np.array([float(load)]))
        comm = derive_community_tariffs(book) if community else None
        return build_model(grid, [b], {}, book, comm)

    def test_surplus_caps_export(self):
        built = self._single(-15)
        ok = assignment(built, comm_export={("b", 0): 15}, direction={("b", 0): 1})
        assert "eq11" not in tags(built, ok)
        over = assignment(built, comm_export={("b", 0): 16}, grid_import={("b", 0): 1},
                          direction={("b", 0): 1})
        assert "eq11" in tags(built, over)
        imp = assignment(built, comm_import={("b", 0): 1}, grid_export={("b", 0): 16},
                         direction={("b", 0): 1})
        assert "eq10" in tags(built, imp)

    @pytest.mark.parametrize("d", [0, 1])
    def test_zero_imbalance_blocks_trading(self, d):
        built = self._single(0)
        out = assignment(built, comm_export={("b", 0): 5}, grid_import={("b", 0): 5},
                         direction={("b", 0): d})
        inn = assignment(built, comm_import={("b", 0): 5}, grid_export={("b", 0): 5},
                         direction={("b", 0): d})
        assert tags(built, out) & {"eq10", "eq11"}
        assert tags(built, inn) & {"eq10", "eq11"}

    @pytest.mark.parametrize("d", [0, 1])
    def test_simultaneous_flows_excluded(self, d):
        built = self._single(0)
        x = assignment(built, comm_export={("b", 0): 5}, comm_import={("b", 0): 5},
                       direction={("b", 0): d})
        assert "eq10" in tags(built, x)

    def test_bad_big_m(self):
        grid = TimeGrid(1, 1.0)
        b = BuildingSeries("b", np.array([30.0]))
        ev = EVRequest("ev", 0, 1, 1.0, 1.0, 0.0)
        assert default_big_m(b, [ev]) == 41.0
        with pytest.raises(BadBigM):
            build_model(grid, [b], {"b": [ev]}, flat_book(grid), big_m={"b": 35.0})

    def test_grid_binary_only_where_export_pays_more(self):
        grid = TimeGrid(2, 1.0)
        book = TariffBook(np.array([0.03, 0.12]), 0.0358, 0.05, 0.5, 0.5, np.full(2, 2.0), 3.0)
        b = BuildingSeries("b", np.array([1.0, 1.0]))
        built = build_model(grid, [b], {}, book)
        assert list(built.layout.grid_direction) == [("b", 0)]

    def test_every_row_tagged(self):
        micro = micro_battery(6)[0]
        built = build_model(micro.grid, micro.buildings, micro.fleets, micro.tariffs,
                            micro.community)
        assert all(r.tag in TAGS for r in built.model.rows)


class TestCommunityBalance:
    def _pair(self, loads):
        grid = TimeGrid(1, 1.0)
        book = flat_book(grid)
        bs = [BuildingSeries(f"b{i}", np.array([float(v)])) for i, v in enumerate(loads)]
        return build_model(grid, bs, {}, book, derive_community_tariffs(book))

    def _flows(self, built, loads, exports, imports):
        x = np.zeros(built.model.n_vars)
        lay = built.layout
        for i, (L, e, m) in enumerate(zip(loads, exports, imports)):
            bid = f"b{i}"
            x[lay.comm_export[bid, 0]] = e
            x[lay.comm_import[bid, 0]] = m
            x[lay.direction[bid, 0]] = 1.0 if e > 0 else 0.0
            r = L + e - m
            x[lay.grid_import[bid, 0]] = max(r, 0)
            x[lay.grid_export[bid, 0]] = max(-r, 0)
        return x

    def test_matched_pair(self):
        built = self._pair([-5, 5])
        assert not tags(built, self._flows(built, [-5, 5], [5, 0], [0, 5]))

    def test_imbalance_detected(self):
        built = self._pair([-5, 5])
        bad = built.model.violations(self._flows(built, [-5, 5], [5, 0], [0, 3]), 1e-7)
        assert [(t, pytest.approx(a)) for _, t, a in bad] == [("eq12", 2.0)]

    def test_four_buildings(self):
        loads = [10, -2, -1, -7]
        built = self._pair(loads)
        assert not tags(built, self._flows(built, loads, [0, 2, 1, 7], [10, 0, 0, 0]))

    def test_extract_rejects_eq12_violation(self):
        built = self._pair([-5, 5])
        with pytest.raises(InconsistentSolution):
            extract_solution(built, self._flows(built, [-5, 5], [5, 0], [0, 4]))


class TestExtract:
    def test_pass_through(self):
        grid = TimeGrid(4, 1.0)
        book = flat_book(grid)
        b = BuildingSeries("b", np.array([1.0, 2.0, 0.0, 4.0]))
        built = build_model(grid, [b], {}, book)
        x = assignment(built, grid_import={("b", h): v for h, v in enumerate(b.net_load)})
        sol = extract_solution(built, x)
        assert sol.costs["b"].electricity_cost == pytest.approx(7 * 0.12)
        assert sol.costs["b"].ev_revenue == 0

    def test_empty_building_contributes_nothing(self):
        grid = TimeGrid(4, 1.0)
        b = BuildingSeries("b", np.zeros(4))
        sol = solve_schedule(build_model(grid, [b], {}, flat_book(grid)))
        assert sol.objective == 0 and sol.status == "optimal"

    @pytest.mark.parametrize("i", range(8))
    def test_optimal_solutions_reprice(self, i):
        micro = micro_battery(8, seed=11)[i]
        built = build_model(micro.grid, micro.buildings, micro.fleets, micro.tariffs,
                            micro.community)
        sol = solve_schedule(built)
        assert sol.status == "optimal"
        assert sol.total_objective == pytest.approx(sol.objective, rel=1e-6, abs=1e-9)
        assert verify_solution(sol, micro.buildings, micro.fleets) == []

    def test_conflicting_rows_report_tag(self):
        grid = TimeGrid(4, 1.0)
        ev = EVRequest("ev", 0, 4, 4.0, 1.0, 0.0)
        b = BuildingSeries("b", np.zeros(4))
        built = build_model(grid, [b], {"b": [ev]}, flat_book(grid))
        cols = [built.layout.charge["ev", h] for h in range(4)]
        built.model.add_row({j: 1.0 for j in cols}, EQ, 30.0, "eq6")
        with pytest.raises(Infeasible) as info:
            solve_schedule(built)
        assert info.value.tag == "eq6"


class TestProperties:
    def test_zero_flexibility_reduction(self):
        grid = TimeGrid(8, 1.0)
        ev = EVRequest("ev", 1, 7, 6.0, 2.0, 0.0)
        book = flat_book(grid)
        early = np.zeros(8)
        early[1:3] = 10
        late = np.zeros(8)
        late[5:7] = 10
        a = ev_cost(ev, early, np.zeros(8), book, grid)
        b = ev_cost(ev, late, np.zeros(8), book, grid)
        assert a.total == pytest.approx(b.total, abs=1e-12)
        # EV part of the objective: parking - idle flex + charging
        assert a.total == pytest.approx(6 * 0.5 - 4 * 0.5 + 2 * 2.0)

    @pytest.mark.parametrize("i", range(10))
    def test_monotone_community_benefit(self, i):
        micro = micro_battery(10, seed=99)[i]
        comm = micro.community or CommunityTariffs(micro.tariffs.grid_export_comp,
                                                   micro.tariffs.grid_export_comp
                                                   + micro.tariffs.grid_use_fee)
        args = (micro.grid, micro.buildings, micro.fleets, micro.tariffs)
        joint = solve_schedule(build_model(*args, comm)).objective
        alone = solve_schedule(build_model(*args, None)).objective
        assert joint <= alone + 1e-6 * max(1, abs(alone))

    def test_gap_option_respected(self):
        micro = micro_battery(3, seed=5)[0]
        built = build_model(micro.grid, micro.buildings, micro.fleets, micro.tariffs,
                            micro.community)
        sol = solve_schedule(built, SolveOptions(rel_gap=1e-9))
        assert abs(sol.objective - sol.best_bound) <= 1e-9 * max(1, abs(sol.objective)) + 1e-12
