"""Command line driver: ``tdflux --config run.ini [--mode ...] [--out dir]``.

Config files are INI style (sections of ``key = value`` lines).  Physical
inputs use road units (m, s, km/h, cars/km, cars/h) and are converted to SI
before any solve.  Every run writes plain CSV artifacts plus ``manifest.json``;
numbers are written with ``repr`` (shortest round-trip decimal), so identical
configs give identical bytes.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 certificate failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import DomainError, InfeasibleInflowError, NumericalError, OracleValidityError, StepSizeError
from .flux import LWRFlux, SpeedProfile, speed_l1_distance
from .ibvp import IBVPProblem, PiecewiseConstantFn
from .solver import GridSpec, SolutionField, SolverConfig, l1_gap, solve, solve_via_gamma
from .traffic import (
    KMH,
    PER_HOUR,
    PER_KM,
    LightSchedule,
    TrafficScenario,
    build_problem,
    emptying_time,
    queue_functional,
    run_scenario,
    sweep_speed_limits,
)
from . import verify

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CERTIFICATE = 0, 2, 3, 4
MODES = ("solve", "certify", "sweep", "gamma-check")


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# Schema


def _float(s: str) -> float:
    x = float(s)
    if not math.isfinite(x):
        raise ValueError("not a finite number")
    return x


def _int(s: str) -> int:
    return int(s)


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _floats(s: str) -> tuple[float, ...]:
    parts = [p for p in s.replace(",", " ").split()]
    if not parts:
        raise ValueError("empty list")
    return tuple(_float(p) for p in parts)


def _str(s: str) -> str:
    return s.strip()


def _opt_str(s: str) -> str | None:
    s = s.strip()
    return s or None


# section -> key -> (parser, default); default None means "required when used"
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "run": {"mode": (_str, None), "seed": (_int, 0), "out": (_opt_str, None)},
    "grid": {"cells": (_int, 500), "cfl": (_float, 0.9), "backend": (_opt_str, None), "levels": (_int, 3)},
    "scenario": {
        "length_m": (_float, 250.0),
        "max_density_cars_per_km": (_float, 200.0),
        "inflow_cars_per_hour": (_float, 2000.0),
        "v_green_kmh": (_float, 60.0),
        "v_red_kmh": (_float, 40.0),
        "delta_m": (_float, 100.0),
        "inflow_cycles": (_int, 3),
        "horizon_s": (_float, 1200.0),
        "stop_mass_cars": (_float, 1e-3),
        "record_dt_s": (_float, 0.25),
        "entry_green_s": (_float, 39.0),
        "entry_red_s": (_float, 27.0),
        "entry_first_switch_s": (_float, 39.0),
        "entry_initial_color": (_str, "green"),
        "exit_green_s": (_float, 30.0),
        "exit_red_s": (_float, 45.0),
        "exit_first_switch_s": (_float, 12.0),
        "exit_initial_color": (_str, "green"),
    },
    "sweep": {"speeds_kmh": (_floats, None)},
    "problem": {
        "source": (_str, None),
        "kind": (_str, "segment"),
        "R": (_float, 1.0),
        "T": (_float, 1.0),
        "u0_breakpoints": (_floats, (0.0, 1.0)),
        "u0_values": (_floats, (0.0,)),
        "left_breakpoints": (_floats, None),
        "left_values": (_floats, (0.0,)),
        "right_breakpoints": (_floats, None),
        "right_values": (_floats, (0.0,)),
        "speed_breakpoints": (_floats, None),
        "speed_values": (_floats, (1.0,)),
        "record_count": (_int, 11),
    },
    "certify": {"entropy": (_bool, True), "random_pairs": (_int, 0)},
    "output": {"profiles": (_opt_str, None), "profile_stride": (_int, 1)},
}

SOURCES = ("steps", "zero", "random", "traffic")


def _canonical(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_canonical(v) for v in value]
    if isinstance(value, float):
        return repr(value)
    return value


@dataclass
class RunConfig:
    """Validated run description.  ``values`` holds every schema key with defaults applied."""

    values: dict[str, dict[str, Any]]
    scenario: TrafficScenario | None = None
    problem: IBVPProblem | None = None

    def __getitem__(self, key: str) -> Any:
        sec, _, name = key.partition(".")
        return self.values[sec][name]

    @property
    def mode(self) -> str:
        return self.values["run"]["mode"]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    def resolved(self) -> dict[str, dict[str, Any]]:
        """JSON-friendly view used for hashing and the manifest; the output location is left out."""
        return {
            sec: {k: _canonical(v) for k, v in sorted(keys.items()) if (sec, k) != ("run", "out")}
            for sec, keys in sorted(self.values.items())
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_ini(self) -> str:
        lines = []
        for sec, keys in sorted(self.values.items()):
            lines.append(f"[{sec}]")
            for k, v in sorted(keys.items()):
                if v is None or (sec, k) == ("run", "out"):
                    continue
                if isinstance(v, tuple):
                    text = ", ".join(repr(x) for x in v)
                elif isinstance(v, bool):
                    text = "true" if v else "false"
                else:
                    text = repr(v) if isinstance(v, float) else str(v)
                lines.append(f"{k} = {text}")
            lines.append("")
        return "\n".join(lines)


def _required_keys_message() -> str:
    return (
        "required keys: [run] mode (or --mode); "
        "[sweep] speeds_kmh for mode sweep; "
        "[problem] source for modes solve, certify and gamma-check"
    )


def _read_ini(text: str, origin: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"), strict=True)
    cp.optionxform = str  # keep key case (R, T)
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {origin}: {exc}") from exc
    return cp


def _scenario_from(vals: dict[str, Any]) -> TrafficScenario:
    return TrafficScenario(
        length=vals["length_m"],
        R=vals["max_density_cars_per_km"] * PER_KM,
        q_in=vals["inflow_cars_per_hour"] * PER_HOUR,
        v_green=vals["v_green_kmh"] * KMH,
        v_red=vals["v_red_kmh"] * KMH,
        delta=vals["delta_m"],
        inflow_cycles=vals["inflow_cycles"],
        horizon=vals["horizon_s"],
        stop_mass=vals["stop_mass_cars"],
        record_dt=vals["record_dt_s"],
        entry=LightSchedule(
            vals["entry_green_s"], vals["entry_red_s"], vals["entry_first_switch_s"], vals["entry_initial_color"]
        ),
        exit=LightSchedule(
            vals["exit_green_s"], vals["exit_red_s"], vals["exit_first_switch_s"], vals["exit_initial_color"]
        ),
    )


def _steps(bps, vals, lo, hi, name) -> PiecewiseConstantFn:
    if bps is None:
        bps = (lo, hi)
    if len(bps) != len(vals) + 1:
        raise ConfigError(f"[problem] {name}: need one more breakpoint than values")
    return PiecewiseConstantFn(bps, vals)


def _problem_from(vals: dict[str, Any], scenario: TrafficScenario | None, seed: int) -> IBVPProblem:
    src = vals["source"]
    if src == "traffic":
        return build_problem(scenario)
    if src == "random":
        return verify.random_step_problem(np.random.default_rng(seed), vals["kind"], T=vals["T"], R=vals["R"])
    T = vals["T"]
    g = LWRFlux(vals["R"])
    if src == "zero":
        length = vals["u0_breakpoints"][-1]
        zero_t = PiecewiseConstantFn.constant(0.0, 0.0, T)
        right = zero_t if vals["kind"] == "segment" else None
        return IBVPProblem(
            vals["kind"], PiecewiseConstantFn.constant(0.0, 0.0, length), zero_t, SpeedProfile.constant(1.0, T), g, right, T
        )
    u0 = _steps(vals["u0_breakpoints"], vals["u0_values"], None, None, "u0")
    left = _steps(vals["left_breakpoints"], vals["left_values"], 0.0, T, "left")
    right = _steps(vals["right_breakpoints"], vals["right_values"], 0.0, T, "right") if vals["kind"] == "segment" else None
    sbp = vals["speed_breakpoints"] or (0.0, T)
    if len(sbp) != len(vals["speed_values"]) + 1:
        raise ConfigError("[problem] speed: need one more breakpoint than values")
    v = SpeedProfile(sbp, vals["speed_values"])
    return IBVPProblem(vals["kind"], u0, left, v, g, right, T)


def parse_config_text(text: str, origin: str = "<config>", overrides: dict[str, Any] | None = None) -> RunConfig:
    """Parse and validate INI text; ``overrides`` maps ``"section.key"`` to already-typed values."""
    cp = _read_ini(text, origin)
    values: dict[str, dict[str, Any]] = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{origin}: unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{origin}: unknown key {key!r} in [{sec}]")
            parser = SCHEMA[sec][key][0]
            try:
                values[sec][key] = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"{origin}: [{sec}] {key} = {raw!r}: {exc}") from exc
    for dotted, val in (overrides or {}).items():
        if val is None:
            continue
        sec, _, key = dotted.partition(".")
        values[sec][key] = val

    mode = values["run"]["mode"]
    if mode is None:
        raise ConfigError(f"{origin}: missing [run] mode; {_required_keys_message()}")
    if mode not in MODES:
        raise ConfigError(f"{origin}: [run] mode must be one of {', '.join(MODES)}, got {mode!r}")
    g = values["grid"]
    if g["cells"] < 4:
        raise ConfigError("[grid] cells must be at least 4")
    if not 0 < g["cfl"] <= 1:
        raise ConfigError("[grid] cfl must lie in (0, 1]")
    if g["backend"] not in (None, "cython", "python"):
        raise ConfigError("[grid] backend must be cython or python")
    if g["levels"] < 2:
        raise ConfigError("[grid] levels must be at least 2")
    if values["output"]["profile_stride"] < 1:
        raise ConfigError("[output] profile_stride must be at least 1")
    if values["output"]["profiles"] not in (None, "true", "false"):
        raise ConfigError("[output] profiles must be true or false")
    if values["run"]["seed"] < 0:
        raise ConfigError("[run] seed must be non-negative")

    try:
        scenario = _scenario_from(values["scenario"])
    except InfeasibleInflowError as exc:
        raise ConfigError(f"[scenario] infeasible inflow: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"[scenario] {exc}") from exc

    cfg = RunConfig(values, scenario)
    if mode == "sweep":
        speeds = values["sweep"]["speeds_kmh"]
        if speeds is None:
            raise ConfigError(f"{origin}: missing [sweep] speeds_kmh; {_required_keys_message()}")
        for V in speeds:
            try:
                scenario.with_speed_limit_kmh(V)
            except InfeasibleInflowError as exc:
                raise ConfigError(f"[sweep] speed {V!r} km/h is infeasible: {exc}") from exc
    else:
        p = values["problem"]
        if p["source"] is None:
            raise ConfigError(f"{origin}: missing [problem] source; {_required_keys_message()}")
        if p["source"] not in SOURCES:
            raise ConfigError(f"[problem] source must be one of {', '.join(SOURCES)}")
        if p["kind"] not in ("segment", "half_line"):
            raise ConfigError("[problem] kind must be segment or half_line")
        if p["record_count"] < 2:
            raise ConfigError("[problem] record_count must be at least 2")
        try:
            cfg.problem = _problem_from(p, scenario, values["run"]["seed"])
        except (ValueError, DomainError) as exc:
            raise ConfigError(f"[problem] {exc}") from exc
    return cfg


def parse_config(path: str | Path, overrides: dict[str, Any] | None = None) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from exc
    return parse_config_text(text, str(p), overrides)


def config_from_manifest(path: str | Path) -> RunConfig:
    """Rebuild the run configuration recorded in a manifest."""
    data = json.loads(Path(path).read_text())
    return parse_config_text(data["config_ini"], str(path))


# --------------------------------------------------------------------------
# Artifacts


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_profiles(path: Path, fld: SolutionField, stride: int = 1) -> None:
    x = fld.grid.centers.tolist()
    xs = [repr(v) for v in x]
    with open(path, "w", newline="\n") as fh:
        fh.write("t,x,u\n")
        for i in range(0, fld.times.size, stride):
            t = repr(float(fld.times[i]))
            us = fld.profiles[i].tolist()
            fh.write("".join(f"{t},{xv},{u!r}\n" for xv, u in zip(xs, us)))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _problem_record_times(cfg: RunConfig) -> tuple[float, ...]:
    T = cfg.problem.T
    return tuple(np.linspace(0.0, T, cfg["problem.record_count"]).tolist())


def _solve_configured(cfg: RunConfig) -> tuple[IBVPProblem, SolutionField]:
    grid = cfg.values["grid"]
    if cfg["problem.source"] == "traffic":
        return run_scenario(cfg.scenario, grid["cells"], grid["cfl"], grid["backend"])
    problem = cfg.problem
    sc = SolverConfig(cfl=grid["cfl"], record_times=_problem_record_times(cfg), backend=grid["backend"])
    return problem, solve(problem, GridSpec.for_problem(problem, grid["cells"]), sc)


def _want_profiles(cfg: RunConfig) -> bool:
    flag = cfg["output.profiles"]
    return (cfg.mode != "sweep") if flag is None else flag == "true"


def _run_solve(cfg: RunConfig, out: Path) -> tuple[int, dict[str, Any]]:
    problem, fld = _solve_configured(cfg)
    if _want_profiles(cfg):
        write_profiles(out / "profiles.csv", fld, cfg["output.profile_stride"])
    d = fld.diagnostics
    summary = {"records": int(fld.times.size), "steps": d.n_steps, "mass_defect": repr(d.mass_defect)}
    if cfg["problem.source"] == "traffic":
        summary["J"] = repr(queue_functional(fld, cfg.scenario).J)
        summary["emptying_time"] = repr(emptying_time(fld, cfg.scenario))
    return EXIT_OK, {"grid": _grid_record(fld.grid), "summary": summary}


def _grid_record(grid: GridSpec) -> dict[str, Any]:
    return {"n_cells": grid.n_cells, "x_lo": repr(grid.x_lo), "x_hi": repr(grid.x_hi), "dx": repr(grid.dx)}


def _stability_pairs(cfg: RunConfig, n_pairs: int) -> list[verify.CertificateReport]:
    """Data and speed stability certificates on random pairs, two grids each."""
    rng = np.random.default_rng(cfg.seed + 1)
    n_fine = cfg["grid.cells"]
    n_coarse = max(4, n_fine // 2)
    reports = []

    def gap(p, q, n):
        grid = GridSpec.for_problem(p, n)
        sc = SolverConfig(cfl=cfg["grid.cfl"], record_times=(p.T,), backend=cfg["grid.backend"])
        return l1_gap(solve(p, grid, sc).final, solve(q, grid, sc).final, grid)

    for i in range(n_pairs):
        p = verify.random_step_problem(rng, "segment")
        q = p.replace(v=verify.random_speed(rng, p.T))
        b = verify.flux_stability_bound(p, q, p.T).value
        reports.append(verify.stability_certificate(f"speed_stability[{i}]", b, gap(p, q, n_fine), gap(p, q, n_coarse)))
        q2 = p.replace(
            u_o=verify.random_step_problem(rng, "segment").u_o,
            u_b_left=verify.random_step_problem(rng, "segment").u_b_left,
        )
        b2 = verify.data_stability_bound(p.u_o, q2.u_o, p.boundary_data, q2.boundary_data, p.v, p.g, p.T)
        reports.append(verify.stability_certificate(f"data_stability[{i}]", b2, gap(p, q2, n_fine), gap(p, q2, n_coarse)))
    return reports


def _run_certify(cfg: RunConfig, out: Path) -> tuple[int, dict[str, Any]]:
    problem, fld = _solve_configured(cfg)
    reports = verify.run_certificates(fld, problem)
    if cfg["certify.entropy"]:
        ent_field = fld
        if fld.times.size > 241:
            idx = np.unique(np.linspace(0, fld.times.size - 1, 241).round().astype(int))
            ent_field = SolutionField(fld.times[idx], fld.profiles[idx], fld.grid, fld.diagnostics)
        ent_problem = problem.replace(T=float(ent_field.times[-1])) if ent_field.times[-1] < problem.T else problem
        reports.append(verify.check_entropy_inequality(ent_field, ent_problem))
    reports += _stability_pairs(cfg, cfg["certify.random_pairs"])
    write_csv(
        out / "certificates.csv",
        ["check", "bound", "empirical", "margin", "pass"],
        [(r.check, r.bound, r.empirical, r.margin, r.passed) for r in reports],
    )
    if _want_profiles(cfg):
        write_profiles(out / "profiles.csv", fld, cfg["output.profile_stride"])
    failed = [r.check for r in reports if not r.passed]
    status = EXIT_CERTIFICATE if failed else EXIT_OK
    return status, {"grid": _grid_record(fld.grid), "summary": {"failed": failed, "checks": len(reports)}}


def _run_sweep(cfg: RunConfig, out: Path) -> tuple[int, dict[str, Any]]:
    g = cfg.values["grid"]
    speeds = cfg["sweep.speeds_kmh"]
    rows = sweep_speed_limits(cfg.scenario, speeds, g["cells"], g["cfl"], g["backend"])
    write_csv(
        out / "sweep.csv",
        ["V_kmh", "J", "total_discharge", "emptying_time"],
        [(r.V_kmh, r.J, r.total_discharge, r.emptying_time) for r in rows],
    )
    if _want_profiles(cfg):
        for V in speeds:
            _, fld = run_scenario(cfg.scenario.with_speed_limit_kmh(V), g["cells"], g["cfl"], g["backend"])
            write_profiles(out / f"profiles_V{V:g}.csv", fld, cfg["output.profile_stride"])
    best = min(rows, key=lambda r: r.J)
    grid = GridSpec(g["cells"], 0.0, cfg.scenario.length)
    return EXIT_OK, {"grid": _grid_record(grid), "summary": {"argmin_V_kmh": repr(best.V_kmh)}}


def _run_gamma_check(cfg: RunConfig, out: Path) -> tuple[int, dict[str, Any]]:
    problem = cfg.problem
    g = cfg.values["grid"]
    T = problem.T
    rows = []
    for level in range(g["levels"]):
        n = g["cells"] * 2**level
        grid = GridSpec.for_problem(problem, n)
        sc = SolverConfig(cfl=g["cfl"], record_times=(T,), backend=g["backend"])
        direct = solve(problem, grid, sc)
        rescaled = solve_via_gamma(problem, grid, sc)
        gap = l1_gap(direct.final, rescaled.final, grid)
        mass = float(np.abs(direct.final).sum() * grid.dx)
        rows.append((level, n, gap, mass, gap / mass if mass > 0 else 0.0))
    write_csv(out / "gamma_check.csv", ["level", "n_cells", "l1_gap", "mass", "relative_gap"], rows)
    gaps = [r[2] for r in rows]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    grid = GridSpec.for_problem(problem, g["cells"])
    return EXIT_OK, {"grid": _grid_record(grid), "summary": {"monotone": monotone}}


RUNNERS = {"solve": _run_solve, "certify": _run_certify, "sweep": _run_sweep, "gamma-check": _run_gamma_check}


def run(cfg: RunConfig, out: str | Path) -> int:
    """Execute ``cfg`` and write its artifacts into ``out``; returns the exit status."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        status, info = RUNNERS[cfg.mode](cfg, out)
    except (NumericalError, StepSizeError, DomainError, OracleValidityError, FloatingPointError) as exc:
        _write_error(out, EXIT_NUMERICAL, exc)
        return EXIT_NUMERICAL
    artifacts = {p.name: _sha256(p) for p in sorted(out.glob("*.csv"))}
    manifest = {
        "tool": "tdflux",
        "version": __version__,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "config": cfg.resolved(),
        "config_ini": cfg.to_ini(),
        "grid": info["grid"],
        "summary": info["summary"],
        "status": status,
        "artifacts": artifacts,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return status


def _write_error(out: Path | None, code: int, exc: BaseException) -> None:
    record = {"status": code, "error": type(exc).__name__, "message": str(exc)}
    text = json.dumps(record, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n")
        except OSError:
            pass


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tdflux", description="Conservation laws with time-dependent flux v(t) g(u).")
    ap.add_argument("--config", required=True, help="INI run description")
    ap.add_argument("--mode", choices=MODES, help="overrides [run] mode")
    ap.add_argument("--out", help="output directory (overrides [run] out)")
    ap.add_argument("--seed", type=int, help="random seed for property suites")
    ap.add_argument("--cells", type=int, help="number of grid cells")
    ap.add_argument("--cfl", type=float, help="CFL number in (0, 1]")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    overrides = {
        "run.mode": args.mode,
        "run.seed": args.seed,
        "run.out": args.out,
        "grid.cells": args.cells,
        "grid.cfl": args.cfl,
    }
    out = Path(args.out) if args.out else None
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as exc:
        _write_error(out, EXIT_CONFIG, exc)
        return EXIT_CONFIG
    out = Path(cfg["run.out"] or "tdflux-out")
    return run(cfg, out)


if __name__ == "__main__":
    sys.exit(main())
