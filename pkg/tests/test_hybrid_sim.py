import csv
import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from relayfold.cycle_finder import find_cycle
from relayfold.errors import NoCrossing, OutOfBox
from relayfold.hybrid_sim import (TRAJECTORY_COLUMNS, StopRule, default_mode, sample_rows,
                                  simulate, write_rows)
from relayfold.integrator import ToleranceSet
from relayfold.model_core import Mode, abs_model, mass_spring


def check_invariants(traj, tol=1e-11):
    mode = traj.initial_mode
    for arc, (ev, new_mode) in zip(traj.arcs, traj.events):
        assert arc.mode is mode
        assert new_mode is mode.other
        assert ev.state[0] == traj.switch_line(new_mode)
        assert abs(arc.end[0] - ev.state[0]) <= tol and arc.end[1] == ev.state[1]
        mode = new_mode
    for prev, nxt in zip(traj.arcs, traj.arcs[1:]):
        assert prev.end == nxt.start
        assert prev.t_end == nxt.t_start


def test_two_switches_alternate(ms):
    # admissible side for the default mass-spring is x < 0
    x = -0.001
    traj = simulate(ms, x, (x, -0.05), Mode.R, StopRule(max_switches=2))
    assert [ev.state[0] for ev, _ in traj.events] == [-x, x]
    assert [m for _, m in traj.events] == [Mode.L, Mode.R]
    check_invariants(traj)


def test_first_switch_with_positive_gap(ms):
    # from y=-0.05 the R arc only dips to x=-0.00025; y=-0.1 reaches the -0.001 line
    traj = simulate(ms, 0.001, (0.001, -0.1), Mode.R, StopRule(max_switches=1))
    ev, new_mode = traj.events[0]
    assert ev.state[0] == -0.001 and new_mode is Mode.L


def test_returns_converge_monotonically(ms):
    x = -1e-5
    y_fix = find_cycle(ms, x).y_fix
    traj = simulate(ms, x, (x, -0.1), Mode.R, StopRule(max_switches=60))
    dist = [abs(y - y_fix) for y in traj.returns()]
    assert len(dist) == 30
    assert all(b < a for a, b in zip(dist, dist[1:]))


def test_abs_sustained_oscillation():
    m = abs_model()
    x = 1e-5  # dlambda * k > 0
    y_fix = find_cycle(m, x).y_fix
    traj = simulate(m, x, (x, 0.5 * y_fix), Mode.R, StopRule(max_switches=50))
    assert len(traj.events) == 50
    check_invariants(traj)
    env = [max(abs(s.x_at(i / 16)) for s in arc.steps for i in range(17)) for arc in traj.arcs]
    # overshoot beyond the lines scales like dlambda^(2/3) (measured 0.32)
    assert max(env) <= 0.5 * x ** (2 / 3)
    assert max(env[-10:]) <= 1.01 * max(env[-20:-10])
    lo = min(s.x_at(i / 16) for arc in traj.arcs[-10:] for s in arc.steps for i in range(17))
    hi = max(s.x_at(i / 16) for arc in traj.arcs[-10:] for s in arc.steps for i in range(17))
    assert lo < -x and hi > x


def test_zero_gap_still_alternates(ms):
    traj = simulate(ms, 0.0, (0.0, -0.05), Mode.R, StopRule(max_switches=6))
    assert [m for _, m in traj.events] == [Mode.L, Mode.R] * 3
    assert all(ev.state[0] == 0.0 for ev, _ in traj.events)
    check_invariants(traj)


@given(st.floats(-1e-3, -1e-7), st.floats(0.02, 0.15))
def test_invariants_random_starts(x, y):
    traj = simulate(mass_spring(), x, (x, -y), None, StopRule(max_switches=6))
    assert traj.initial_mode is Mode.R
    check_invariants(traj)


def test_default_mode():
    assert default_mode(0.01, (0.01, 0.0)) is Mode.R
    assert default_mode(0.01, (-0.01, 0.0)) is Mode.L
    assert default_mode(0.0, (0.0, 0.0)) is Mode.R


def test_max_time_stop(ms):
    traj = simulate(ms, -1e-4, (-1e-4, -0.05), Mode.R, StopRule(max_switches=None, max_time=0.3))
    assert traj.t_final == pytest.approx(0.3)
    assert all(ev.t_star <= 0.3 for ev, _ in traj.events)


def test_no_return_raises(ms):
    # on the inadmissible side the L arc never reaches +x before leaving the box
    with pytest.raises((NoCrossing, OutOfBox)):
        simulate(ms, 0.001, (0.001, -0.1), Mode.R, StopRule(max_switches=2),
                 ToleranceSet(t_budget=50.0))


def test_csv_export(ms):
    x = -0.001
    traj = simulate(ms, x, (x, -0.05), Mode.R, StopRule(max_switches=2))
    rows = sample_rows(ms, traj, 0.01)
    text = write_rows(rows, TRAJECTORY_COLUMNS)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert [r["event"] for r in parsed].count("1") == 2
    ts = [float(r["t"]) for r in parsed]
    assert ts == sorted(ts)
    assert text == write_rows(sample_rows(ms, traj, 0.01), TRAJECTORY_COLUMNS)


def test_physical_coordinates_in_export():
    m = abs_model()
    traj = simulate(m, 1e-5, (1e-5, 3.0), Mode.R, StopRule(max_switches=2))
    rows = sample_rows(m, traj, 1e-3)
    assert rows[0]["x"] == pytest.approx(0.1 + 1e-5)
    assert rows[0]["y"] == pytest.approx(m.fold_point[1] + 3.0)
