import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oneway_cqed import schedule as sc
from oneway_cqed.gates import gate_conditions

TABLE1_DISTANCES = {(1, 2): 0.2000, (1, 3): 0.1500, (1, 4): 0.0833, (2, 3): 0.0833, (2, 4): 0.0335, (3, 4): 0.0100}


def test_cavity_assignment():
    assert sc.pair_to_cavity(1, 2, 4, "paper_eq10") == 1
    assert sc.pair_to_cavity(1, 2, 4) == 5
    assert sc.pair_to_cavity(3, 4, 4) == 1
    with pytest.raises(ValueError):
        sc.pair_to_cavity(2, 2, 4)


@given(st.integers(2, 9).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1), st.integers(1, n - 1))))
def test_orientations_are_mirror_images(args):
    n, i, d = args
    j = min(i + d, n)
    if j == i:
        return
    a = sc.pair_to_cavity(i, j, n, "paper_eq10")
    b = sc.pair_to_cavity(i, j, n, "table1_reversed")
    assert a + b == 2 * n - 2
    assert 1 <= a <= 2 * n - 3


def test_table1_distances_and_residuals():
    cfg = sc.TABLE1
    for (i, j), expected in TABLE1_DISTANCES.items():
        assert sc.collision_distance(i, j, cfg) == pytest.approx(expected, rel=0.02)
    res = sc.residuals(cfg)
    assert np.abs(res).max() < 8e-6
    assert np.allclose(res * 1e6, [1.656, 1.603, -0.2, 0.239, -0.41, -0.507], atol=2e-3)


def test_table1_events_and_detector_order():
    cfg = sc.TABLE1
    events = {ev.pair: ev for ev in sc.collision_events(cfg)}
    assert events[(1, 4)].cavity == 3 and events[(1, 4)].time == pytest.approx(0.833e-3, abs=5e-6)
    assert events[(2, 3)].cavity == 3 and events[(2, 3)].time == pytest.approx(1.040e-3, abs=5e-6)
    assert sc.detector_order(cfg) == [4, 3, 2, 1]
    assert sc.arrival_times(cfg, 0.25) == pytest.approx([2.5e-3, 2.408e-3, 2.183e-3, 1.5e-3], abs=1e-6)
    assert sc.validate_schedule(cfg).ok


def test_collision_events_tolerance():
    with pytest.raises(sc.ScheduleError, match="misses"):
        sc.collision_events(sc.TABLE1, tolerance=1e-6)


def test_equal_velocities_never_meet():
    cfg = dataclasses.replace(sc.TABLE1, v=(100.0, 100.0, 146.0, 250.0))
    with pytest.raises(sc.ScheduleError, match="never meet"):
        sc.collision_distance(1, 2, cfg)


def test_violation_close_cavities():
    L = list(sc.TABLE1.L)
    L[1] = L[0] + 1e-3
    rep = sc.validate_schedule(dataclasses.replace(sc.TABLE1, L=tuple(L)))
    assert any(v.startswith("waist separation: cavity 2") for v in rep.violations)


def test_violation_long_apparatus():
    L = list(sc.TABLE1.L)
    L[-1] = 0.25
    rep = sc.validate_schedule(dataclasses.replace(sc.TABLE1, L=tuple(L)))
    assert any(v.startswith("length") for v in rep.violations)


def test_violation_crossing_and_velocity():
    cfg = dataclasses.replace(sc.TABLE1, v=(100.0, 101.0, 146.0, 2000.0))
    rep = sc.validate_schedule(cfg)
    text = " ".join(rep.violations)
    assert "velocity resolution" in text and "v_4" in text and "residual" in text


@given(st.integers(1, 4), st.floats(-1e-4, 1e-4))
def test_residual_shift_is_antisymmetric(atom, shift):
    """Delaying atom a by s moves r_(a, j) by +s and r_(i, a) by -s, leaving other pairs fixed."""
    base = sc.residuals(sc.TABLE1)
    t = list(sc.TABLE1.t)
    if atom == 1:
        # t_1 is pinned at 0; delaying everyone else is the same as advancing atom 1
        t = [0.0] + [x - shift for x in t[1:]]
    else:
        t[atom - 1] += shift
    moved = sc.residuals(dataclasses.replace(sc.TABLE1, t=tuple(t)))
    for idx, (i, j) in enumerate(sc.pairs(4)):
        expect = shift if i == atom else (-shift if j == atom else 0.0)
        assert moved[idx] - base[idx] == pytest.approx(expect, abs=1e-15)


def test_config_round_trip_and_errors():
    cfg = sc.TABLE1
    assert sc.ScheduleConfig.from_dict(json.loads(cfg.to_json())) == cfg
    assert cfg.variable_count == 12
    with pytest.raises(sc.ScheduleError) as exc:
        sc.ScheduleConfig(3, (1.0, -2.0), (0.1, 0.0, 0.0), (0.2, 0.1, 0.3))
    msg = str(exc.value)
    for needle in ("expected 3 velocities", "v_mps[1]", "t_s[0]", "L_m[1]"):
        assert needle in msg
    with pytest.raises(sc.ScheduleError, match="unknown key"):
        sc.ScheduleConfig.from_dict({**cfg.to_dict(), "extra": 1})


def test_bounds_validation():
    assert sc.bounds_errors({}) == []
    errs = sc.bounds_errors({"v_range": [500, 100], "cavity_waist": -1, "bogus": 0})
    assert len(errs) >= 3


def test_solve_two_atoms():
    cfg = sc.solve_schedule(2, seed=0, starts=10)
    assert isinstance(cfg, sc.ScheduleConfig)
    assert sc.validate_schedule(cfg).ok
    assert np.abs(sc.residuals(cfg)).max() < 1e-6


def test_solve_is_deterministic():
    a = sc.solve_schedule(3, seed=5, starts=8)
    b = sc.solve_schedule(3, seed=5, starts=8)
    assert a == b and isinstance(a, sc.ScheduleConfig)
    c = sc.solve_schedule(3, seed=5, starts=8, workers=2)
    assert c == a


def test_impossible_apparatus_is_reported():
    bounds = sc.PhysicalBounds(max_length=0.02)
    out = sc.solve_schedule(5, bounds, starts=2)
    assert isinstance(out, sc.Infeasible) and out.starts == 0


def test_scan_csv():
    rows = sc.feasibility_scan([2], trials=2, starts=4)
    assert rows[0].successes == 2
    text = sc.scan_csv(rows)
    assert text.splitlines()[0] == "n,trials,successes,best_residual_s"
    assert text.splitlines()[1].startswith("2,2,2,")


def test_budget_table1():
    b = sc.experiment_budget(sc.TABLE1)
    assert b.total_flight_time == pytest.approx(2.5e-3)
    assert b.interaction_time == pytest.approx(4e-5)
    assert b.passes
    assert b.margins["T_r_over_flight"] == pytest.approx(12.0)
    assert b.margins["T_ceff_over_interaction"] == pytest.approx(2500.0)
    slow = sc.experiment_budget(sc.TABLE1, gate=gate_conditions(2 * math.pi * 10.0, m=1))
    assert not slow.passes
