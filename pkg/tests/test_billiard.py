import math

import numpy as np
import pytest

from wtd.billiard import (
    EPS_CORNER,
    BilliardState,
    Dir,
    EventKind,
    advance,
    estimate_diffusion_exponents,
    next_event,
    random_start,
    trace_events,
    validate_params,
    worker_count,
)
from wtd.errors import OutOfDomain, SingularTrajectory

HALF = validate_params(0.5, 0.5)


def stepped_first_event(frac, sign, theta, a, b, dt=1e-7, horizon=0.3):
    """Time-stepping oracle: first time the ray enters the obstacle or leaves the cell."""
    t = np.arange(1, int(horizon / dt)) * dt
    x = frac[0] + sign[0] * math.cos(theta) * t
    y = frac[1] + sign[1] * math.sin(theta) * t
    inside = (np.abs(x - 0.5) < a / 2) & (np.abs(y - 0.5) < b / 2)
    out = (x < 0) | (x > 1) | (y < 0) | (y > 1)
    hit = np.flatnonzero(inside | out)[0]
    return t[hit], bool(inside[hit])


def plane_trace(x, y, vx, vy, a, b, T):
    """Independent tracer in plane coordinates: ray against all nearby obstacles."""
    t = 0.0
    while t < T:
        best, hit = math.inf, None
        cx, cy = round(x), round(y)
        for m in range(cx - 2, cx + 3):
            for n in range(cy - 2, cy + 3):
                x0, x1, y0, y1 = m - a / 2, m + a / 2, n - b / 2, n + b / 2
                for xs in (x0, x1):
                    s = (xs - x) / vx
                    if s > 1e-12 and y0 < y + vy * s < y1 and s < best:
                        best, hit = s, "v"
                for ys in (y0, y1):
                    s = (ys - y) / vy
                    if s > 1e-12 and x0 < x + vx * s < x1 and s < best:
                        best, hit = s, "h"
        step = min(best, 0.9, T - t)
        x, y, t = x + vx * step, y + vy * step, t + step
        if step == best:
            if hit == "v":
                vx = -vx
            else:
                vy = -vy
    return x, y


def test_validate_params():
    assert validate_params(0.5, 0.5).a == 0.5
    assert validate_params(0.25, 0.9).b == 0.9
    for a, b in [(1.0, 0.5), (0.0, 0.5), (0.5, 1.0), (0.5, -0.1), (1.5, 0.5)]:
        with pytest.raises(OutOfDomain):
            validate_params(a, b)


def test_vertical_wall_example():
    st = BilliardState((0, 0), (0.1, 0.5), Dir.PP, math.pi / 4)
    ev = next_event(st, HALF)
    assert ev.kind == EventKind.VerticalWall
    assert ev.dt == pytest.approx(0.15 * math.sqrt(2), abs=1e-12)
    assert ev.new_state.frac == pytest.approx((0.25, 0.65), abs=1e-12)
    assert ev.new_state.dir == Dir.MP
    t_or, inside = stepped_first_event((0.1, 0.5), (1, 1), math.pi / 4, 0.5, 0.5)
    assert inside and abs(t_or - ev.dt) < 1e-6


def test_cell_crossing_example():
    st = BilliardState((0, 0), (0.1, 0.05), Dir.PM, math.pi / 4)
    ev = next_event(st, HALF)
    assert ev.kind == EventKind.CellCrossing
    assert ev.dt == pytest.approx(0.05 * math.sqrt(2), abs=1e-12)
    assert ev.new_state.cell == (0, -1)
    assert ev.new_state.dir == Dir.PM
    t_or, inside = stepped_first_event((0.1, 0.05), (1, -1), math.pi / 4, 0.5, 0.5)
    assert not inside and abs(t_or - ev.dt) < 1e-6


def test_corner_hit_is_singular():
    d = 0.1
    st = BilliardState((0, 0), (0.25 - d, 0.25 - d), Dir.PP, math.pi / 4)
    with pytest.raises(SingularTrajectory):
        next_event(st, HALF)


@pytest.mark.parametrize("seed", range(6))
def test_next_event_matches_time_stepping(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(0.2, 0.8, 2)
    p = validate_params(a, b)
    theta = rng.uniform(0.1, 1.4)
    st = random_start(p, theta, rng)
    ev = next_event(st, p)
    t_or, inside = stepped_first_event(st.frac, (1, 1), theta, a, b, dt=1e-6, horizon=1.5)
    assert abs(t_or - ev.dt) < 2e-6
    assert inside == (ev.kind in (EventKind.VerticalWall, EventKind.HorizontalWall))


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (0.25, 0.9), (0.8, 0.3)])
def test_matches_independent_plane_tracer(a, b):
    p = validate_params(a, b)
    rng = np.random.default_rng(11)
    for _ in range(3):
        theta = rng.uniform(0.05, 1.5)
        st = random_start(p, theta, rng)
        stats = advance(st, p, 500.0)
        fs = stats.final_state
        x, y = plane_trace(st.frac[0] - 0.5, st.frac[1] - 0.5, math.cos(theta), math.sin(theta),
                           a, b, 500.0)
        assert fs.cell[0] + fs.frac[0] - 0.5 == pytest.approx(x, abs=1e-8)
        assert fs.cell[1] + fs.frac[1] - 0.5 == pytest.approx(y, abs=1e-8)


def test_four_direction_and_obstacle_avoidance():
    p = validate_params(0.4, 0.7)
    st = random_start(p, 0.61, np.random.default_rng(3))
    log = trace_events(st, p, 200_000)
    assert log["stopped"] == -1
    assert set(np.unique(log["sx"])) <= {-1, 1} and set(np.unique(log["sy"])) <= {-1, 1}
    xl, xr, yl, yr = p.box
    fx, fy = log["fx"], log["fy"]
    inside = (fx > xl + 1e-12) & (fx < xr - 1e-12) & (fy > yl + 1e-12) & (fy < yr - 1e-12)
    assert not inside.any()


def test_distance_integral_against_quadrature():
    p = validate_params(0.5, 0.5)
    st = random_start(p, 0.83, np.random.default_rng(5))
    T = 60.0
    log = trace_events(st, p, 400)
    # rebuild the planar path and integrate d(t) with a fine midpoint rule
    t = np.concatenate(([0.0], log["t"]))
    px = np.concatenate(([st.frac[0]], log["m"] + log["fx"]))
    py = np.concatenate(([st.frac[1]], log["n"] + log["fy"]))
    grid = (np.arange(400_000) + 0.5) * (T / 400_000)
    gx = np.interp(grid, t, px)
    gy = np.interp(grid, t, py)
    d = np.hypot(gx - px[0], gy - py[0])
    ref = d.mean()
    stats = advance(st, p, T, t0=T, rho=2.0)
    assert stats.final["avg_d"] == pytest.approx(ref, rel=1e-6)


def test_sample_invariants():
    p = validate_params(0.3, 0.6)
    st = random_start(p, 0.47, np.random.default_rng(9))
    s = advance(st, p, 1e5)
    t, dn, dm, av = s.t, s.d_now, s.d_max, s.avg_d
    assert np.all(np.diff(dm) >= 0)
    assert np.all(av >= 0) and np.all(av <= dm + 1e-12)
    assert np.all(np.abs(np.diff(dn)) <= np.diff(t) + 1e-9)
    cell_l1 = np.abs(s.column("dm")) + np.abs(s.column("dn"))
    assert np.all(cell_l1 - 2 <= dn * math.sqrt(2) + 1e-9)
    assert np.all(dn <= cell_l1 + 2 + 1e-9)


def test_reversibility():
    p = validate_params(0.5, 0.5)
    st = random_start(p, 0.7137, np.random.default_rng(2))
    T = 2e4
    fwd = advance(st, p, T)
    fs = fwd.final_state
    back = BilliardState(fs.cell, fs.frac, fs.dir.reversed(), fs.theta)
    s2 = advance(back, p, T)
    end = s2.final_state
    err = math.hypot(end.cell[0] + end.frac[0] - st.frac[0], end.cell[1] + end.frac[1] - st.frac[1])
    assert err <= 1e-6 * fwd.events


def test_short_run_has_no_motion():
    st = random_start(HALF, 0.3, np.random.default_rng(1))
    s = advance(st, HALF, 1e-9)
    assert s.final["d_max"] <= 1e-9 and s.final["avg_d"] <= 1e-9


def test_symmetric_diagonal_is_singular_or_bounded():
    # the diagonal ray through the cell centre line hits corners or bounces periodically
    st = BilliardState((0, 0), (0.1, 0.1), Dir.PP, math.pi / 4)
    try:
        s = advance(st, HALF, 1e4)
    except SingularTrajectory:
        return
    assert s.final["d_max"] < 10


def test_free_motion_exponents():
    est = estimate_diffusion_exponents(HALF, 8, 1e5, 3, (1e2, 1e5), reflections=False, workers=1)
    assert est.max_exp == pytest.approx(1.0, abs=1e-3)
    assert est.avg_exp == pytest.approx(1.0, abs=1e-3)


def test_estimate_independent_of_scheduling():
    e1 = estimate_diffusion_exponents(HALF, 4, 1e4, 5, (1e2, 1e4), workers=1)
    e2 = estimate_diffusion_exponents(HALF, 4, 1e4, 5, (1e2, 1e4), workers=2)
    assert e1.as_dict() == e2.as_dict()


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("WTD_THREADS", "1")
    assert worker_count() == 1


def test_corner_tolerance_constant():
    assert EPS_CORNER == 1e-12
