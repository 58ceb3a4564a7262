"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the lines are printed
even under output capture) or ``python3 tests/test_acceptance.py``.
"""

import filecmp
import subprocess
import sys

import numpy as np
import pytest

from tdflux.errors import InfeasibleInflowError
from tdflux.flux import LWRFlux, SpeedProfile
from tdflux.ibvp import IBVPProblem, PiecewiseConstantFn as P
from tdflux.solver import GridSpec, SolutionField, SolverConfig, l1_gap, solve, solve_via_gamma
from tdflux.traffic import (
    KMH,
    SWEEP_SPEEDS_KMH,
    PER_HOUR,
    TrafficScenario,
    inflow_to_boundary_density,
    road_capacity,
    run_scenario,
    sweep_speed_limits,
)
from tdflux import verify

N_CELLS = 500


@pytest.fixture
def report(capsys):
    def _report(number, title, passed, detail):
        with capsys.disabled():
            print(f"\ncriterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}")
        return passed

    return _report


@pytest.fixture(scope="module")
def sweep_rows():
    return sweep_speed_limits(TrafficScenario(), SWEEP_SPEEDS_KMH, N_CELLS)


def test_1_sweep_minimum_at_lowest_speed(sweep_rows, report):
    J = {r.V_kmh: r.J for r in sweep_rows}
    argmin = min(J, key=J.get)
    ok = argmin == 40.0 and J[40.0] < J[70.0]
    detail = " ".join(f"J({V:g})={J[V]:.1f}" for V in SWEEP_SPEEDS_KMH)
    assert report(1, "queue functional minimal at V = 40 km/h", ok, detail)


def test_2_equal_throughput(sweep_rows, report):
    d = np.array([r.total_discharge for r in sweep_rows])
    spread = (d.max() - d.min()) / d.mean()
    assert report(2, "discharge equal within 1%", spread <= 0.01, f"discharge {d.min():.6f}..{d.max():.6f}, spread {spread:.2e}")


def test_3_feasibility_boundary(report):
    g = LWRFlux(TrafficScenario().R)
    q = 2000 * PER_HOUR
    cap40 = road_capacity(40 * KMH, g) / PER_HOUR
    feasible = inflow_to_boundary_density(q, 40 * KMH, g) <= g.R / 2
    TrafficScenario().with_speed_limit_kmh(40)
    try:
        TrafficScenario().with_speed_limit_kmh(39)
        rejected = False
    except InfeasibleInflowError:
        rejected = True
    ok = feasible and rejected and abs(cap40 - 2000) < 1e-9
    assert report(3, "40 km/h feasible, 39 km/h rejected", ok, f"capacity at 40 km/h = {cap40:.9g} cars/h")


def _riemann_errors(ul, ur):
    T, L = 0.96, 2.0
    g = LWRFlux(1.0)
    p = IBVPProblem("segment", P([0, L / 2, L], [ul, ur]), P.constant(ul, 0, T), SpeedProfile.constant(1.0, T), g, P.constant(ur, 0, T), T)
    exact = verify.exact_riemann_lwr(ul, ur, 1.0, 1.0, L / 2)
    errs = []
    for n in (100, 200, 400, 800):
        grid = GridSpec(n, 0, L)
        f = solve(p, grid, SolverConfig(cfl=0.8, record_times=(T,)))
        xs = np.linspace(0, L, 20 * n + 1)
        samples = exact.sample(T, xs)
        # cell averages by the trapezoid rule on 20 sub-intervals per cell
        mids = 0.5 * (samples[:-1] + samples[1:])
        ref = mids.reshape(n, 20).mean(axis=1)
        errs.append(l1_gap(f.final, ref, grid))
    return np.array(errs)


def test_4_riemann_convergence(report):
    lines, ok = [], True
    for name, (ul, ur) in (("shock", (0.2, 0.8)), ("rarefaction", (1.0, 0.0))):
        e = _riemann_errors(ul, ur)
        ratios = e[:-1] / e[1:]
        ok &= bool(np.all(ratios >= 1.3))
        lines.append(f"{name} ratios " + ", ".join(f"{r:.2f}" for r in ratios))
    assert report(4, "L1 error ratio >= 1.3 per halving", ok, "; ".join(lines))


def test_5_gamma_equivalence(report):
    T = 1.0
    p = IBVPProblem(
        "segment",
        P([0, 0.7, 1.3, 2.0], [0.1, 0.7, 0.3]),
        P.constant(0.4, 0, T),
        SpeedProfile([0, 0.61, T], [0.8, 1.7]),
        LWRFlux(1.0),
        P.constant(0.2, 0, T),
        T,
    )
    gaps, mass = [], 0.0
    for n in (100, 200, 400, 800):
        grid = GridSpec.for_problem(p, n)
        cfg = SolverConfig(cfl=0.5, record_times=(T,))
        direct = solve(p, grid, cfg).final
        gaps.append(l1_gap(direct, solve_via_gamma(p, grid, cfg).final, grid))
        mass = float(np.abs(direct).sum() * grid.dx)
    gaps = np.array(gaps)
    ok = bool(np.all(np.diff(gaps) < 0)) and gaps[-1] < 0.01 * mass
    detail = "relative gaps " + ", ".join(f"{g / mass:.4f}" for g in gaps)
    assert report(5, "direct and rescaled solutions agree", ok, detail)


def test_6_range_and_tv_certificates(report):
    rng = np.random.default_rng(6)
    failures, worst_tv = [], -np.inf
    for i in range(20):
        p = verify.random_step_problem(rng, "segment" if i % 2 == 0 else "half_line")
        f = solve(p, GridSpec.for_problem(p, 200), SolverConfig(record_times=tuple(np.linspace(0, p.T, 11))))
        rng_rep = verify.range_certificate(f, p)
        tv_rep = verify.tv_certificate(f, p)
        worst_tv = max(worst_tv, tv_rep.empirical - tv_rep.bound)
        failures += [f"{i}:{r.check}" for r in (rng_rep, tv_rep) if not r.passed]
    ok = not failures
    assert report(6, "range and TV on 20 random problems", ok, f"failures {failures or 'none'}, max TV excess {worst_tv:.2e}")


def test_7_stability_certificates(report):
    rng = np.random.default_rng(7)
    cfg = SolverConfig(record_times=(1.0,))

    def gap(p, q, n):
        grid = GridSpec.for_problem(p, n)
        return l1_gap(solve(p, grid, cfg).final, solve(q, grid, cfg).final, grid)

    failures, worst_ratio = [], 0.0
    for i in range(20):
        p = verify.random_step_problem(rng, "segment")
        q = p.replace(v=verify.random_speed(rng, p.T))
        other = verify.random_step_problem(rng, "segment")
        q2 = p.replace(u_o=other.u_o, u_b_left=other.u_b_left, u_b_right=other.u_b_right)
        b_speed = verify.flux_stability_bound(p, q, p.T).value
        b_data = verify.data_stability_bound(p.u_o, q2.u_o, p.boundary_data, q2.boundary_data, p.v, p.g, p.T)
        for name, qq, b in (("speed", q, b_speed), ("data", q2, b_data)):
            rep = verify.stability_certificate(f"{name}[{i}]", b, gap(p, qq, 400), gap(p, qq, 200))
            if b > 0:
                worst_ratio = max(worst_ratio, rep.empirical / b)
            if not rep.passed:
                failures.append(rep.check)
    ok = not failures
    assert report(7, "stability bounds on 20 speed and 20 data pairs", ok, f"failures {failures or 'none'}, max gap/bound {worst_ratio:.3f}")


def test_8_entropy_residuals(report):
    sc = TrafficScenario()
    problem, fld = run_scenario(sc, N_CELLS)
    idx = np.unique(np.linspace(0, fld.times.size - 1, 241).round().astype(int))
    sub = SolutionField(fld.times[idx], fld.profiles[idx], fld.grid)
    rep = verify.check_entropy_inequality(sub, problem.replace(T=float(sub.times[-1])))

    # inadmissible expansion shock frozen in time
    T, L, n = 1.0, 2.0, 800
    grid = GridSpec(n, 0, L)
    ul, ur = 0.8, 0.2
    frozen = SolutionField(np.linspace(0, T, 41), np.tile(np.where(grid.centers < L / 2, ul, ur), (41, 1)), grid)
    bad = IBVPProblem("segment", P([0, L / 2, L], [ul, ur]), P.constant(ul, 0, T), SpeedProfile.constant(1.0, T), LWRFlux(1.0), P.constant(ur, 0, T), T)
    worst = min(verify.entropy_residuals(frozen, bad), key=lambda r: r.normalized)

    ok = rep.passed and worst.normalized < -0.1
    detail = f"traffic min residual {-rep.empirical:.4f} >= -{rep.allowance:.4f}; expansion shock {worst.normalized:.3f} at k={worst.k:.3f}"
    assert report(8, "entropy residuals", ok, detail)


def test_9_cli_determinism(tmp_path, report):
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[run]\nmode = certify\nseed = 11\n[grid]\ncells = 120\n[problem]\nsource = random\nkind = half_line\n"
        "record_count = 21\n[certify]\nrandom_pairs = 2\n[output]\nprofiles = true\n"
    )
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        subprocess.run([sys.executable, "-m", "tdflux", "--config", str(ini), "--out", str(out)], check=True)
        outs.append(out)
    names = sorted(p.name for p in outs[0].glob("*.csv"))
    _, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
    ok = len(names) >= 2 and not mismatch and not errors
    assert report(9, "identical CLI runs give identical CSVs", ok, f"compared {', '.join(names)}; mismatched {mismatch or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
