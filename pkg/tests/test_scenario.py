import dataclasses

import numpy as np
import pytest

from evflex.core import BuildingSeries, EVRequest, TimeGrid, validate_request
from evflex.exceptions import BadWindow, DimensionMismatch, GenerationExhausted, TooLarge
from evflex.oracle import MicroScenario, micro_battery, oracle_enumerate, random_micro
from evflex.scenario import (NET_LOAD_PRESETS, ScenarioConfig, build_scenario,
                             default_buildings, generate_ev_population, generate_net_load,
                             read_config, read_net_load_csv, run_scenario, write_config,
                             write_net_load_csv)
from evflex.schedule import build_model, solve_schedule, verify_solution
from evflex.tariffs import CommunityTariffs, TariffBook

DAY = TimeGrid.day(0.25)


class TestPopulation:
    def test_defaults(self):
        cfg = ScenarioConfig(rng_seed=3)
        pop = generate_ev_population(cfg)
        assert len(pop) == 30
        for ev in pop:
            assert DAY.hours[ev.arrival_step] >= 8.0
            assert ev.departure_step * 0.25 <= 20.0
            validate_request(ev, DAY)

    def test_default_values(self):
        cfg = ScenarioConfig()
        assert (cfg.n_buildings, cfg.evs_per_building, cfg.population_size) == (4, 6, 30)
        assert (cfg.park_mean, cfg.charge_mean, cfg.discharge_mean) == (8, 2, 0.75)
        assert (cfg.p_max, cfg.efficiency, cfg.window_start, cfg.window_end) == (10, 0.93, 8, 20)

    def test_zero_spread(self):
        cfg = ScenarioConfig(park_sd=0, charge_sd=0, discharge_sd=0)
        pop = generate_ev_population(cfg)
        assert {(e.t_park, e.t_charge_req, e.t_discharge_allow) for e in pop} == {(8, 2, 0.75)}

    def test_same_seed_same_population(self):
        cfg = ScenarioConfig(rng_seed=42)
        assert generate_ev_population(cfg) == generate_ev_population(cfg)
        assert generate_ev_population(cfg) != generate_ev_population(
            dataclasses.replace(cfg, rng_seed=43))

    def test_sample_moments(self):
        cfg = ScenarioConfig(population_size=3000, evs_per_building=1, rng_seed=1)
        pop = generate_ev_population(cfg)
        assert np.mean([e.t_park for e in pop]) == pytest.approx(8.0, abs=0.1)
        assert np.mean([e.t_charge_req for e in pop]) == pytest.approx(2.0, abs=0.1)

    def test_exhausted(self):
        cfg = ScenarioConfig(park_mean=2.0, park_sd=0.0, charge_mean=3.0, charge_sd=0.0)
        with pytest.raises(GenerationExhausted):
            generate_ev_population(cfg)

    def test_fleets_distinct(self):
        scn = build_scenario(ScenarioConfig(rng_seed=4))
        for bid, evs in scn.fleets.items():
            assert len(evs) == 6 and len({e.ev_id for e in evs}) == 6
            assert all(e.ev_id.startswith(bid + "/") for e in evs)


class TestNetLoad:
    def test_no_surplus(self):
        b = generate_net_load(DAY, 30, 120)
        assert b.net_load.min() >= 0

    def test_trough_depth(self):
        b = generate_net_load(DAY, 35, 150, 40, (11, 15))
        inside = (DAY.hours >= 11) & (DAY.hours < 15)
        assert -40 - 1e-9 <= b.net_load[inside].min() <= -35
        assert b.net_load.min() >= -40 - 1e-9

    def test_continuous(self):
        b = generate_net_load(DAY, 35, 150, 40, (11, 15))
        assert np.abs(np.diff(b.net_load)).max() < 20

    def test_presets_mix(self):
        loads = [b.net_load for b in default_buildings(ScenarioConfig())]
        assert len(loads) == len(NET_LOAD_PRESETS) == 4
        assert any(l.min() > 0 for l in loads)
        noon = DAY.step_of(13)
        assert any(l[noon] < 0 for l in loads)

    def test_bad_window(self):
        with pytest.raises(BadWindow):
            generate_net_load(DAY, 30, 120, 10, (20, 26))

    def test_csv_round_trip(self, tmp_path):
        b = generate_net_load(DAY, 35, 150, 40, (11, 15), building_id="b2")
        path = tmp_path / "b2.csv"
        write_net_load_csv(b, path)
        back = read_net_load_csv(path, DAY, "b2")
        assert np.array_equal(back.net_load, b.net_load)
        with pytest.raises(DimensionMismatch):
            read_net_load_csv(path, TimeGrid.day(1.0), "b2")


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = ScenarioConfig(rng_seed=9, dt=0.5, parking=0.7)
        path = tmp_path / "s.cfg"
        write_config(cfg, path)
        assert read_config(path) == cfg

    def test_comments_and_relative_paths(self, tmp_path):
        path = tmp_path / "s.cfg"
        path.write_text("# demo\nrng_seed = 5  # seed\nwholesale_file = w.csv\n")
        cfg = read_config(path)
        assert cfg.rng_seed == 5 and cfg.wholesale_file == str(tmp_path / "w.csv")

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "s.cfg"
        path.write_text("colour = blue\n")
        with pytest.raises(ValueError):
            read_config(path)

    def test_invalid_values(self):
        with pytest.raises(ValueError):
            ScenarioConfig(park_mean=0)
        with pytest.raises(ValueError):
            ScenarioConfig(window_start=20, window_end=8)


HOURLY = ScenarioConfig(dt=1.0, rng_seed=7)


@pytest.fixture(scope="module")
def hourly_runs():
    scn = build_scenario(HOURLY)
    return scn, {m: run_scenario(scn, m) for m in ("baseline", "individual", "community")}


class TestRunScenario:
    def test_baseline_closed_form(self):
        cfg = dataclasses.replace(HOURLY, n_buildings=1)
        scn = build_scenario(cfg)
        run = run_scenario(scn, "baseline")
        load = scn.buildings[0].net_load
        assert load.min() > 0
        assert run.electricity_cost == pytest.approx(float(np.sum(load * scn.tariffs.grid_import)))
        assert run.ev_revenue == 0 and not run.solution.charge

    def test_restriction_and_trend(self, hourly_runs):
        _, runs = hourly_runs
        base, ind, com = runs["baseline"], runs["individual"], runs["community"]
        assert com.objective <= ind.objective + 1e-6 * abs(ind.objective)
        assert ind.electricity_cost >= base.electricity_cost
        assert ind.objective <= base.electricity_cost
        assert com.objective <= base.electricity_cost

    def test_individual_has_no_community_flow(self, hourly_runs):
        _, runs = hourly_runs
        sol = runs["individual"].solution
        assert all(not v.any() for v in sol.comm_export.values())
        assert all(not v.any() for v in sol.comm_import.values())

    def test_solutions_satisfy_constraints(self, hourly_runs):
        scn, runs = hourly_runs
        for mode in ("individual", "community"):
            assert verify_solution(runs[mode].solution, scn.buildings, scn.fleets) == []

    def test_single_building_community_equals_individual(self):
        scn = build_scenario(dataclasses.replace(HOURLY, n_buildings=1))
        ind = run_scenario(scn, "individual")
        com = run_scenario(scn, "community")
        assert com.objective == pytest.approx(ind.objective, abs=1e-9)
        assert not com.solution.comm_export["b1"].any()

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            run_scenario(build_scenario(HOURLY), "solo")

    def test_accepts_config(self):
        run = run_scenario(dataclasses.replace(HOURLY, n_buildings=1), "baseline")
        assert list(run.costs) == ["b1"]


def flat_micro(load, ev=None, steps=4, community=None):
    grid = TimeGrid(steps, 1.0)
    book = TariffBook(np.full(steps, 0.12), 0.0358, 0.05, 0.5, 0.5, np.full(steps, 2.0), 3.0)
    b = BuildingSeries("m", np.asarray(load, dtype=float))
    return MicroScenario(grid, [b], {"m": [ev] if ev else []}, book, community)


class TestOracle:
    def test_no_ev_closed_form(self):
        micro = flat_micro([10, 20, -10, 0])
        expected = 30 * 0.12 - 10 * 0.0358
        assert oracle_enumerate(micro) == pytest.approx(expected)

    def test_flat_tariffs_many_optima(self):
        ev = EVRequest("ev", 0, 4, 4.0, 2.0, 0.0)
        res = oracle_enumerate(flat_micro([20, 20, 20, 20], ev), with_details=True)
        assert res.n_optimal == 6 and res.evaluated == 6

    def test_surplus_step_attracts_charging(self):
        ev = EVRequest("ev", 0, 4, 4.0, 1.0, 0.0)
        micro = flat_micro([10, -10, 10, 10], ev)
        res = oracle_enumerate(micro, with_details=True)
        assert res.n_optimal == 1 and res.best["ev"].tolist() == [0, 10, 0, 0]
        built = build_model(micro.grid, micro.buildings, micro.fleets, micro.tariffs)
        assert solve_schedule(built).objective == pytest.approx(res.objective, abs=1e-6)

    def test_forced_opposite_directions(self):
        grid = TimeGrid(2, 1.0)
        book = TariffBook(np.full(2, 0.12), 0.0358, 0.05, 0.5, 0.5, np.full(2, 2.0), 3.0)
        bs = [BuildingSeries("a", np.array([-10.0, 10.0])), BuildingSeries("b", np.array([10.0, -10.0]))]
        comm = CommunityTariffs(0.0358, 0.0858)
        micro = MicroScenario(grid, bs, {}, book, comm)
        built = build_model(grid, bs, {}, book, comm)
        sol = solve_schedule(built)
        assert sol.comm_export["a"].tolist() == [10, 0] and sol.comm_import["a"].tolist() == [0, 10]
        assert sol.objective == pytest.approx(oracle_enumerate(micro), abs=1e-9)

    def test_too_large(self):
        with pytest.raises(TooLarge):
            oracle_enumerate(flat_micro(np.zeros(9), steps=9))

    def test_unaligned_rejected(self):
        ev = EVRequest("ev", 0, 4, 4.0, 2.0, 1.0, 10, 10, 0.93)
        with pytest.raises(ValueError):
            oracle_enumerate(flat_micro([0, 0, 0, 0], ev))

    @pytest.mark.parametrize("seed", range(30))
    def test_random_agreement(self, seed):
        rng = np.random.default_rng(seed)
        micro = random_micro(rng, seed, community=bool(seed % 2))
        ref = oracle_enumerate(micro)
        built = build_model(micro.grid, micro.buildings, micro.fleets, micro.tariffs,
                            micro.community)
        assert solve_schedule(built).objective == pytest.approx(ref, abs=1e-6 * max(1, abs(ref)))

    def test_battery_is_reproducible(self):
        a, b = micro_battery(5), micro_battery(5)
        assert [oracle_enumerate(m) for m in a] == [oracle_enumerate(m) for m in b]
