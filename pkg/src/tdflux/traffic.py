"""Traffic lights on a single road: boundary data, speed-limit law and queue functional.

All quantities are SI internally: metres, seconds, cars per metre, metres per
second.  Helpers taking km/h or cars/hour say so in their names.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InfeasibleInflowError
from .flux import LWRFlux, SpeedProfile
from .ibvp import IBVPProblem, PiecewiseConstantFn
from .solver import GridSpec, SolutionField, SolverConfig, solve

KMH = 1.0 / 3.6  # m/s per km/h
PER_HOUR = 1.0 / 3600.0  # 1/s per 1/h
PER_KM = 1e-3  # 1/m per 1/km

#: relative slack when comparing an inflow with the road capacity
CAPACITY_RTOL = 1e-12


@dataclass(frozen=True)
class LightSchedule:
    """Two-colour periodic light.

    The light shows ``initial_color`` on ``[0, first_switch)`` and then
    alternates, each colour lasting its own duration.  Colour queries are
    right-continuous: at a switch time the new colour is already on.
    """

    green_duration: float
    red_duration: float
    first_switch: float
    initial_color: str = "green"

    def __post_init__(self):
        if not (self.green_duration > 0 and self.red_duration > 0):
            raise ValueError("light durations must be positive")
        if self.first_switch < 0:
            raise ValueError("first switch must be at t >= 0")
        if self.initial_color not in ("green", "red"):
            raise ValueError(f"unknown colour {self.initial_color!r}")

    @property
    def cycle(self) -> float:
        return self.green_duration + self.red_duration

    def _other(self, color: str) -> str:
        return "red" if color == "green" else "green"

    def _duration(self, color: str) -> float:
        return self.green_duration if color == "green" else self.red_duration

    def switch_times(self, horizon: float) -> np.ndarray:
        """Switch times in ``[0, horizon]``."""
        out = []
        t, color = self.first_switch, self._other(self.initial_color)
        while t <= horizon:
            out.append(t)
            t += self._duration(color)
            color = self._other(color)
        return np.array(out, dtype=float)

    def color(self, t: float) -> str:
        if t < self.first_switch:
            return self.initial_color
        after = self._other(self.initial_color)
        phase = math.fmod(t - self.first_switch, self.cycle)
        return after if phase < self._duration(after) else self.initial_color

    def is_green(self, t: float) -> bool:
        return self.color(t) == "green"


def entry_light() -> LightSchedule:
    """Green for 39 s from t = 0, then red for 27 s."""
    return LightSchedule(39.0, 27.0, 39.0, "green")


def exit_light() -> LightSchedule:
    """Green 30 s, red 45 s, first turning red at t = 12 s."""
    return LightSchedule(30.0, 45.0, 12.0, "green")


@dataclass(frozen=True)
class TrafficScenario:
    """Road between two lights, in SI units.

    ``horizon`` caps the run; the march stops earlier at the first record time
    after the inflow has ceased at which fewer than ``stop_mass`` cars remain.
    """

    length: float = 250.0
    R: float = 200 * PER_KM
    q_in: float = 2000 * PER_HOUR
    v_green: float = 60 * KMH
    v_red: float = 40 * KMH
    delta: float = 100.0
    inflow_cycles: int = 3
    horizon: float = 1200.0
    stop_mass: float = 1e-3
    record_dt: float = 0.25
    entry: LightSchedule = field(default_factory=entry_light)
    exit: LightSchedule = field(default_factory=exit_light)

    def __post_init__(self):
        for name in ("length", "R", "v_green", "v_red", "delta", "horizon", "record_dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.q_in < 0:
            raise ValueError("inflow must be non-negative")
        if self.delta > self.length:
            raise ValueError("delta must not exceed the road length")
        if int(self.inflow_cycles) != self.inflow_cycles or self.inflow_cycles < 0:
            raise ValueError("inflow_cycles must be a non-negative integer")
        # feasibility at the slowest speed the road ever sees
        inflow_to_boundary_density(self.q_in, min(self.v_green, self.v_red), LWRFlux(self.R))

    @property
    def inflow_end(self) -> float:
        return self.inflow_cycles * self.entry.cycle

    @property
    def flux(self) -> LWRFlux:
        return LWRFlux(self.R)

    def with_speed_limit_kmh(self, V_kmh: float) -> "TrafficScenario":
        return replace(self, v_red=V_kmh * KMH)

    def speed(self, t: float) -> float:
        return self.v_green if self.exit.is_green(t) else self.v_red

    def record_times(self) -> np.ndarray:
        n = int(math.floor(self.horizon / self.record_dt + 1e-9))
        return np.arange(n + 1) * self.record_dt


def psi(r, R: float):
    """Queue weight: 0 below 0.75 R, linear ramp to 1 at 0.85 R, 1 above."""
    r = np.asarray(r, dtype=float)
    return np.clip(10.0 * r / R - 7.5, 0.0, 1.0)


def road_capacity(v_t: float, g: LWRFlux) -> float:
    """Maximal flow ``v_t max g = v_t R / 4`` in cars per second."""
    return v_t * g.R / 4.0


def inflow_to_boundary_density(q: float, v_t: float, g: LWRFlux) -> float:
    """Subcritical density ``u`` in ``[0, R/2]`` with ``v_t g(u) = q``.

    Flows within ``CAPACITY_RTOL`` of capacity are treated as capacity and
    return ``R/2``; anything above raises ``InfeasibleInflowError``.
    """
    if q < 0:
        raise ValueError("inflow must be non-negative")
    cap = road_capacity(v_t, g)
    if q > cap * (1 + CAPACITY_RTOL):
        raise InfeasibleInflowError(
            f"inflow {q / PER_HOUR:.6g} cars/h exceeds capacity {cap / PER_HOUR:.6g} cars/h at {v_t / KMH:.6g} km/h"
        )
    s = max(0.0, 1.0 - q / cap)
    # 2q / (v (1 + sqrt s)) is the stable form of (R/2)(1 - sqrt s)
    return float(2.0 * q / (v_t * (1.0 + math.sqrt(s)))) if q > 0 else 0.0


def build_problem(scenario: TrafficScenario) -> IBVPProblem:
    s = scenario
    T = s.horizon
    g = s.flux
    entry_sw = s.entry.switch_times(T)
    exit_sw = s.exit.switch_times(T)

    v_pts = np.union1d([0.0, T], exit_sw)
    v_pts = v_pts[v_pts <= T]
    v = SpeedProfile(v_pts, [s.speed(float(t)) for t in v_pts[:-1]])

    in_pts = np.union1d(v_pts, entry_sw)
    if 0 < s.inflow_end < T:
        in_pts = np.union1d(in_pts, [s.inflow_end])
    in_pts = in_pts[in_pts <= T]
    roots = {sp: inflow_to_boundary_density(s.q_in, sp, g) for sp in {s.v_green, s.v_red}}
    ub1 = [
        roots[s.speed(float(t))] if (s.entry.is_green(float(t)) and t < s.inflow_end) else 0.0
        for t in in_pts[:-1]
    ]
    ub2 = [0.0 if s.exit.is_green(float(t)) else s.R for t in v_pts[:-1]]
    return IBVPProblem(
        "segment",
        PiecewiseConstantFn.constant(0.0, 0.0, s.length),
        PiecewiseConstantFn(in_pts, ub1),
        v,
        g,
        PiecewiseConstantFn(v_pts, ub2),
        T,
    )


@dataclass
class QueueFunctionalResult:
    J: float
    times: np.ndarray
    integrand: np.ndarray  # int_{L - delta}^{L} psi(u(t, x)) dx at each record
    V_red: float


def _time_weights(times: np.ndarray) -> np.ndarray:
    """Trapezoid weights on the record times."""
    if times.size < 2:
        return np.zeros_like(times)
    dt = np.diff(times)
    w = np.zeros_like(times)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


def queue_functional(field: SolutionField, scenario: TrafficScenario) -> QueueFunctionalResult:
    """Time integral of the weighted queue length on the last ``delta`` metres."""
    edges = field.grid.edges
    lo, hi = scenario.length - scenario.delta, scenario.length
    if edges[0] > lo + 1e-12 or edges[-1] < hi - 1e-12:
        raise ValueError("field does not cover the queue window")
    overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
    integrand = psi(field.profiles, scenario.R) @ overlap
    J = float(_time_weights(field.times) @ integrand)
    return QueueFunctionalResult(J, field.times.copy(), integrand, scenario.v_red)


@dataclass(frozen=True)
class SweepRow:
    V_kmh: float
    J: float
    total_discharge: float
    emptying_time: float  # nan if the road never emptied before the horizon


def run_scenario(scenario: TrafficScenario, n_cells: int = 500, cfl: float = 0.9, backend: str | None = None):
    """Solve one scenario; returns ``(problem, field)``."""
    problem = build_problem(scenario)
    config = SolverConfig(
        cfl=cfl,
        record_times=tuple(scenario.record_times().tolist()),
        stop_mass=scenario.stop_mass,
        stop_after=scenario.inflow_end,
        backend=backend,
    )
    return problem, solve(problem, GridSpec.for_problem(problem, n_cells), config)


def emptying_time(field: SolutionField, scenario: TrafficScenario) -> float:
    """First record time after the inflow has stopped with mass below ``stop_mass``."""
    m = field.mass()
    ok = (field.times >= scenario.inflow_end) & (m < scenario.stop_mass)
    return float(field.times[np.argmax(ok)]) if ok.any() else math.nan


def sweep_speed_limits(
    template: TrafficScenario,
    V_list_kmh: Iterable[float],
    n_cells: int = 500,
    cfl: float = 0.9,
    backend: str | None = None,
) -> list[SweepRow]:
    scenarios = [template.with_speed_limit_kmh(float(V)) for V in V_list_kmh]  # validates all first
    rows = []
    for V, sc in zip(V_list_kmh, scenarios):
        _, fld = run_scenario(sc, n_cells, cfl, backend)
        J = queue_functional(fld, sc).J
        rows.append(SweepRow(float(V), J, float(fld.diagnostics.cum_outflow[-1]), emptying_time(fld, sc)))
    return rows


SWEEP_SPEEDS_KMH: Sequence[float] = (40.0, 45.0, 50.0, 55.0, 60.0, 65.0, 70.0)
