import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdflux.errors import InfeasibleInflowError
from tdflux.flux import LWRFlux
from tdflux.solver import GridSpec, SolutionField
from tdflux.traffic import (
    KMH,
    PER_HOUR,
    PER_KM,
    LightSchedule,
    TrafficScenario,
    _time_weights,
    build_problem,
    emptying_time,
    inflow_to_boundary_density,
    psi,
    queue_functional,
    road_capacity,
    run_scenario,
    sweep_speed_limits,
)
from tdflux.verify import data_stability_bound, flux_stability_bound

R = 200 * PER_KM
G = LWRFlux(R)
Q = 2000 * PER_HOUR


@pytest.fixture(scope="module")
def base_run():
    sc = TrafficScenario()
    problem, fld = run_scenario(sc, 250)
    return sc, problem, fld


def test_psi_examples():
    r = np.array([0.0, 0.7, 0.75, 0.8, 0.85, 0.9, 1.0]) * R
    assert np.allclose(psi(r, R), [0, 0, 0, 0.5, 1, 1, 1], atol=1e-12)


@given(st.floats(0, 1), st.floats(0, 1))
def test_psi_is_monotone_and_lipschitz(a, b):
    pa, pb = psi(a * R, R), psi(b * R, R)
    assert 0 <= pa <= 1
    assert abs(pa - pb) <= 10 / R * abs(a - b) * R + 1e-12
    if a <= b:
        assert pa <= pb


def test_inflow_roots():
    # at 60 km/h: u = (R/2)(1 - sqrt(1 - 0.4))
    u = inflow_to_boundary_density(Q, 60 * KMH, G)
    assert u == pytest.approx(R / 2 * (1 - math.sqrt(1 - Q / (60 * KMH * R / 4))), rel=1e-13)
    assert 60 * KMH * G(u) == pytest.approx(Q, rel=1e-14)
    assert u < R / 2
    assert inflow_to_boundary_density(0.0, 60 * KMH, G) == 0.0


def test_capacity_edge():
    assert road_capacity(40 * KMH, G) == pytest.approx(Q, rel=1e-14)
    assert inflow_to_boundary_density(Q, 40 * KMH, G) == pytest.approx(R / 2, rel=1e-6)
    with pytest.raises(InfeasibleInflowError):
        inflow_to_boundary_density(Q, 39 * KMH, G)
    with pytest.raises(InfeasibleInflowError):
        TrafficScenario().with_speed_limit_kmh(39)


@given(st.floats(0.0, 1.0), st.floats(1.0, 40.0))
def test_inflow_root_inverts_flux(frac, v):
    q = frac * road_capacity(v, G)
    u = inflow_to_boundary_density(q, v, G)
    assert 0 <= u <= R / 2 + 1e-15
    assert v * G(u) == pytest.approx(q, rel=1e-9, abs=1e-15)


def test_light_schedules():
    entry = LightSchedule(39, 27, 39, "green")
    assert entry.is_green(0) and entry.is_green(38.999)
    assert not entry.is_green(39) and not entry.is_green(65.9)
    assert entry.is_green(66) and not entry.is_green(105)
    assert np.allclose(entry.switch_times(140), [39, 66, 105, 132])
    ex = LightSchedule(30, 45, 12, "green")
    assert ex.is_green(11.9) and not ex.is_green(12) and not ex.is_green(56.9)
    assert ex.is_green(57) and not ex.is_green(87)
    with pytest.raises(ValueError):
        LightSchedule(0, 1, 0)


def test_build_problem_boundary_values():
    sc = TrafficScenario()
    p = build_problem(sc)
    u60 = inflow_to_boundary_density(sc.q_in, sc.v_green, G)
    u40 = inflow_to_boundary_density(sc.q_in, sc.v_red, G)
    assert p.v(0.0) == sc.v_green and p.v(12.0) == sc.v_red and p.v(57.0) == sc.v_green
    assert p.u_b_left(0.0) == pytest.approx(u60)
    assert p.u_b_left(12.0) == pytest.approx(u40)
    assert p.u_b_left(39.0) == 0.0
    assert p.u_b_left(57.0) == 0.0  # entry still red
    assert p.u_b_left(70.0) == pytest.approx(u60)
    assert p.u_b_left(sc.inflow_end + 1.0) == 0.0
    assert p.u_b_right(0.0) == 0.0 and p.u_b_right(12.0) == sc.R and p.u_b_right(57.0) == 0.0


def test_time_weights_integrate_linear_exactly():
    t = np.array([0.0, 0.5, 1.5, 2.0])
    assert _time_weights(t) @ (3 * t + 1) == pytest.approx(8.0)


def _field(times, profile, length=250.0, n=50):
    grid = GridSpec(n, 0.0, length)
    return SolutionField(np.asarray(times, float), np.tile(profile(grid.centers), (len(times), 1)), grid)


def test_queue_functional_examples():
    sc = TrafficScenario()
    times = np.linspace(0, 10, 11)
    full = _field(times, lambda x: np.full_like(x, R))
    assert queue_functional(full, sc).J == pytest.approx(sc.delta * 10)
    half = _field(times, lambda x: np.full_like(x, 0.8 * R))
    assert queue_functional(half, sc).J == pytest.approx(0.5 * sc.delta * 10)
    # dense traffic outside the window does not count
    outside = _field(times, lambda x: np.where(x < sc.length - sc.delta, R, 0.0))
    assert queue_functional(outside, sc).J == pytest.approx(0.0, abs=1e-12)


def test_queue_window_uses_cell_overlaps():
    sc = TrafficScenario(delta=110.0)
    times = np.linspace(0, 1, 3)
    fld = _field(times, lambda x: np.full_like(x, R), n=50)  # window edge on a cell edge
    assert queue_functional(fld, sc).J == pytest.approx(110.0)
    fld = _field(times, lambda x: np.full_like(x, R), n=60)  # window edge inside a cell
    assert queue_functional(fld, sc).J == pytest.approx(110.0)


def test_base_run_behaviour(base_run):
    sc, problem, fld = base_run
    assert fld.profiles.min() >= 0.0 and fld.profiles.max() <= sc.R * (1 + 1e-12)
    t_end = emptying_time(fld, sc)
    assert sc.inflow_end < t_end < sc.horizon
    assert fld.mass()[-1] < sc.stop_mass
    # everything that entered has left
    d = fld.diagnostics
    assert d.cum_outflow[-1] == pytest.approx(d.cum_inflow[-1], abs=sc.stop_mass)
    assert d.cum_inflow[-1] == pytest.approx(sc.q_in * 2 * 39.0 * 1.5, rel=0.02)


def test_no_outflow_during_red(base_run):
    sc, _, fld = base_run
    out = fld.diagnostics.cum_outflow
    t = fld.times
    sw = sc.exit.switch_times(t[-1] + sc.exit.cycle)
    # the exit light starts green, so even-indexed switches turn it red
    reds = [(a, b) for a, b in zip(sw[::2], sw[1::2]) if a < t[-1]]
    assert len(reds) >= 2
    for red_start, red_end in reds:
        sel = (t >= red_start) & (t <= red_end)
        assert np.ptp(out[sel]) == 0.0


def test_sweep_row_matches_single_run(base_run):
    sc, _, fld = base_run
    (row,) = sweep_speed_limits(sc, [40.0], 250)
    assert row.J == queue_functional(fld, sc).J
    assert row.total_discharge == fld.diagnostics.cum_outflow[-1]
    assert row.emptying_time == emptying_time(fld, sc)


def test_sweep_rejects_any_infeasible_speed_up_front():
    with pytest.raises(InfeasibleInflowError):
        sweep_speed_limits(TrafficScenario(), [50.0, 39.0], 100)


def test_emptying_time_nan_when_road_stays_loaded():
    sc = TrafficScenario(horizon=120.0)
    _, fld = run_scenario(sc, 100)
    assert math.isnan(emptying_time(fld, sc))


def _pad(fld, times):
    out = np.zeros((times.size, fld.grid.n_cells))
    out[: fld.times.size] = fld.profiles
    return out


def test_queue_functional_continuity_in_speed_limit():
    """Over a 1 km/h grid, consecutive J values differ by at most the stability modulus."""
    base = TrafficScenario()
    runs = [(sc, *run_scenario(sc, 250)) for sc in (base.with_speed_limit_kmh(V) for V in range(40, 71))]
    Js = [queue_functional(f, sc).J for sc, _, f in runs]
    assert all(b > a for a, b in zip(Js, Js[1:]))
    for (a, pa, fa), (b, pb, fb), Ja, Jb in zip(runs, runs[1:], Js, Js[1:]):
        dJ = abs(Ja - Jb)
        # discrete: psi is 10/R Lipschitz, so |dJ| <= 10/R sum_i w_i ||u_a - u_b||_L1(window)
        times = fa.times if fa.times.size >= fb.times.size else fb.times
        in_win = fa.grid.centers > a.length - a.delta
        l1 = np.abs(_pad(fa, times) - _pad(fb, times))[:, in_win].sum(axis=1) * fa.grid.dx
        assert dJ <= 10 / a.R * (_time_weights(times) @ l1) + 1e-9
        # continuous: speed change through the flux bound, inflow change through the data bound
        t_end = float(times[-1])
        mid = pa.replace(v=pb.v)
        bound = flux_stability_bound(pa, mid, t_end).value + data_stability_bound(
            mid.u_o, pb.u_o, mid.boundary_data, pb.boundary_data, pb.v, pb.g, t_end
        )
        assert dJ <= 10 / a.R * t_end * bound


@pytest.mark.parametrize("cycles", [2, 3, 4, 5])
def test_sweep_ordering_is_robust_to_inflow_duration(cycles):
    sc = TrafficScenario(inflow_cycles=cycles)
    rows = sweep_speed_limits(sc, (40, 55, 70), 250)
    J = [r.J for r in rows]
    assert J[0] < J[1] < J[2]
    d = [r.total_discharge for r in rows]
    assert max(d) - min(d) <= 0.01 * np.mean(d)
