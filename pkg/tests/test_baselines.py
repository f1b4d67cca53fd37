import csv

import numpy as np
import pytest

import oracles
from macnoma.baselines import (
    Scheme, SearchSpace, apply_scheme, evaluate_scheme_sweep, reference_optimize, scenario_objectives,
    sweep_point_config, write_sweep_csv,
)
from macnoma.channel import SystemConfig, channels_at, sample_scenario
from macnoma.link_rates import CandidateSolution, evaluate_links
from macnoma.problem import compute_slacks

# Single-antenna, single-path geometry close enough for F-NOMA to be feasible.
TINY = SystemConfig(n_bs_antennas=1, l_a=1, l_b=1, l_r=1, d_bf=70.0, d_bn=40.0)
# Frozen outputs of oracles.noma_split_grid (200001-point grid) for these seeds.
GRID_OPTIMA = {2: 1.580990483925642, 4: 4.401730604303404, 5: 3.100853503486695}


def _sol(p_n=0.004):
    return CandidateSolution(np.ones(4, complex), np.ones(4, complex), p_n, np.array([0.001, 0.002]),
                             np.array([0.003, 0.004]), np.array([0.005, 0.006]))


def test_scheme_flags():
    assert Scheme.MA_CNOMA.cooperation_enabled and Scheme.MA_CNOMA.ma_enabled
    assert not Scheme.MA_NOMA.cooperation_enabled and Scheme.MA_NOMA.ma_enabled
    assert Scheme.F_CNOMA.cooperation_enabled and not Scheme.F_CNOMA.ma_enabled
    assert Scheme("F-NOMA") is Scheme.F_NOMA
    assert Scheme.MA_CNOMA.enforce_separation and not Scheme.F_CNOMA.enforce_separation


def test_apply_scheme():
    c = SystemConfig()
    s = _sol()
    same = apply_scheme(s, Scheme.MA_CNOMA, c)
    np.testing.assert_array_equal(same.to_vector(), s.to_vector())
    noma = apply_scheme(s, Scheme.MA_NOMA, c)
    assert noma.p_n == 0.0
    np.testing.assert_array_equal(noma.r_f, s.r_f)
    fixed = apply_scheme(s, Scheme.F_NOMA, c)
    assert fixed.p_n == 0.0
    for p in (fixed.t_d, fixed.r_n, fixed.r_f):
        np.testing.assert_array_equal(p, [c.region_side / 2] * 2)


def test_search_space_pins_disabled_variables():
    c = SystemConfig()
    sp = SearchSpace.for_scheme(c, Scheme.F_NOMA)
    assert sp.free.sum() == 16
    assert sp.lower[16] == sp.upper[16] == 0.0
    np.testing.assert_array_equal(sp.lower[17:], np.full(6, c.region_side / 2))
    assert SearchSpace.for_scheme(c, Scheme.MA_NOMA).free.sum() == 16 + 4
    assert SearchSpace.for_scheme(c, Scheme.MA_CNOMA).free.all()


def test_grid_oracle_function_reproduces_frozen_values():
    for seed in (2, 4):
        sc = sample_scenario(TINY, seed)
        ch = channels_at(sc, TINY.region_center, TINY.region_center, TINY.region_center, TINY)
        got = oracles.noma_split_grid(abs(ch.h_n[0]) ** 2, abs(ch.h_f[0]) ** 2, TINY.p_t, TINY.sigma2,
                                      TINY.r_th, points=20_001)
        assert got == pytest.approx(GRID_OPTIMA[seed], rel=1e-3)


@pytest.mark.parametrize("seed", sorted(GRID_OPTIMA))
def test_f_noma_single_antenna_matches_grid_scan(seed):
    rep = reference_optimize(sample_scenario(TINY, seed), TINY, Scheme.F_NOMA, budget=20_000, seed=0)
    assert rep.feasible
    assert rep.best_objective == pytest.approx(GRID_OPTIMA[seed], rel=0.01)
    assert rep.best_objective <= GRID_OPTIMA[seed] * (1 + 1e-4)


def test_report_is_feasible_on_recheck():
    c = SystemConfig()
    sc = sample_scenario(c, 2)
    rep = reference_optimize(sc, c, Scheme.MA_CNOMA, budget=8000, seed=1)
    assert rep.feasible
    s = rep.best_solution
    ev = evaluate_links(channels_at(sc, s.t_d, s.r_n, s.r_f, c), s, c)
    sl = compute_slacks(ev, s, c)
    assert sl.feasible
    assert ev.sum_rate == pytest.approx(rep.best_objective, rel=1e-12)
    assert rep.evaluations_used <= 8000


def test_budget_monotone_and_deterministic():
    c = SystemConfig()
    sc = sample_scenario(c, 6)
    prev = -np.inf
    for budget in (500, 1000, 2000, 4000, 8000, 16000):
        rep = reference_optimize(sc, c, Scheme.MA_CNOMA, budget=budget, seed=3)
        value = rep.best_objective if rep.feasible else -1.0
        assert value >= prev
        prev = value
    again = reference_optimize(sc, c, Scheme.MA_CNOMA, budget=16000, seed=3)
    assert again.best_objective == rep.best_objective


def test_infeasible_problem_reports_least_violation():
    c = SystemConfig(r_th=50.0)
    rep = reference_optimize(sample_scenario(c, 0), c, Scheme.F_NOMA, budget=3000)
    assert not rep.feasible
    assert rep.best_objective < 50.0
    with pytest.raises(ValueError):
        reference_optimize(sample_scenario(c, 0), c, budget=0)


def test_movable_beats_fixed_on_same_scenarios():
    c = SystemConfig()
    for i in range(4):
        sc = sample_scenario(c, 100 + i)
        ma = reference_optimize(sc, c, Scheme.MA_CNOMA, seed=i)
        fx = reference_optimize(sc, c, Scheme.F_CNOMA, seed=i)
        assert ma.feasible
        assert ma.best_objective >= (fx.best_objective if fx.feasible else 0.0)


def test_region_sweep_keeps_center_fixed():
    c = SystemConfig()
    for v in (0.25, 1.0, 1.5):
        pc = sweep_point_config(c, "region", v)
        np.testing.assert_allclose(pc.region_center, c.region_center)
        assert pc.region_side == pytest.approx(v * c.region_side)
    assert sweep_point_config(c, "power", 20.0).p_t == pytest.approx(0.1)
    with pytest.raises(ValueError):
        sweep_point_config(c, "angle", 1.0)
    with pytest.raises(ValueError):
        sweep_point_config(c, "region", 0.0)


def test_fixed_schemes_ignore_region_scale():
    c = SystemConfig()
    obj = scenario_objectives(c, Scheme.F_CNOMA, "region", [0.5, 1.0, 1.5], 2, 3000, 0)
    np.testing.assert_array_equal(obj[0], obj[1])
    np.testing.assert_array_equal(obj[1], obj[2])


def test_scheme_order_does_not_matter():
    c = SystemConfig()
    a = scenario_objectives(c, Scheme.MA_NOMA, "power", [15.0], 2, 2000, 4)
    scenario_objectives(c, Scheme.F_NOMA, "power", [15.0], 2, 2000, 4)
    b = scenario_objectives(c, Scheme.MA_NOMA, "power", [15.0], 2, 2000, 4)
    np.testing.assert_array_equal(a, b)


def test_sweep_rows_and_csv(tmp_path):
    c = SystemConfig()
    rows = evaluate_scheme_sweep(c, Scheme.F_NOMA, "power", [11.0, 18.0], 2, budget=2000, seed=0)
    assert [r.value for r in rows] == [11.0, 18.0]
    assert all(r.n_scenarios == 2 and r.sweep_variable == "bs_power_dbm" for r in rows)
    path = tmp_path / "s.csv"
    write_sweep_csv(path, rows, "config_sha256=abc master_seed=0")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_sha256=abc master_seed=0"
    body = list(csv.DictReader(lines[1:]))
    assert list(body[0]) == ["scheme", "sweep_variable", "value", "mean_rate", "stderr", "n_scenarios"]
    assert body[1]["scheme"] == "F-NOMA"
    with pytest.raises(ValueError):
        evaluate_scheme_sweep(c, Scheme.F_NOMA, "power", [11.0], 0)
