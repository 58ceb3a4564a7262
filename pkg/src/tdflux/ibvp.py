"""Step-function data, convex hulls of data ranges, and total-variation functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np

from .errors import DomainError
from .flux import FluxModel, SpeedProfile


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PiecewiseConstantFn:
    """Right-continuous step function on ``[breakpoints[0], breakpoints[-1]]``.

    Adjacent pieces carrying the same value are merged on construction, so two
    functions that agree everywhere have identical representations.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or vals.ndim != 1 or b.size != vals.size + 1 or vals.size == 0:
            raise ValueError("need len(breakpoints) == len(values) + 1 >= 2")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        keep = np.concatenate(([True], vals[1:] != vals[:-1]))
        vals = vals[keep]
        b = np.concatenate((b[:-1][keep], b[-1:]))
        object.__setattr__(self, "breakpoints", _frozen(b))
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "_cum", _frozen(np.concatenate(([0.0], np.cumsum(vals * np.diff(b))))))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseConstantFn):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.breakpoints.tobytes(), self.values.tobytes()))

    @classmethod
    def constant(cls, value: float, lo: float, hi: float) -> "PiecewiseConstantFn":
        return cls([lo, hi], [value])

    @classmethod
    def from_function(cls, fn: Callable, lo: float, hi: float, resolution: float) -> "PiecewiseConstantFn":
        """Midpoint sampling of a general function on a uniform partition."""
        n = max(1, math.ceil((hi - lo) / resolution - 1e-9))
        b = np.linspace(lo, hi, n + 1)
        return cls(b, np.asarray(fn(0.5 * (b[:-1] + b[1:])), dtype=float))

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def jump_points(self) -> np.ndarray:
        return self.breakpoints[1:-1]

    def _index(self, x):
        return np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0, self.values.size - 1)

    def __call__(self, x):
        """Right-continuous value; constant extension outside the domain."""
        out = self.values[self._index(np.asarray(x, dtype=float))]
        return float(out) if out.ndim == 0 else out

    def trace_right(self, x: float) -> float:
        """Value at ``x+``."""
        return float(self.values[self._index(x)])

    def trace_left(self, x: float) -> float:
        """Value at ``x-``."""
        i = int(np.searchsorted(self.breakpoints, x, side="left")) - 1
        return float(self.values[min(max(i, 0), self.values.size - 1)])

    def total_variation(self, lo: float | None = None, hi: float | None = None) -> float:
        """Sum of jumps lying strictly inside ``(lo, hi)``."""
        lo = self.domain[0] if lo is None else lo
        hi = self.domain[1] if hi is None else hi
        jumps = np.abs(np.diff(self.values))
        inside = (self.jump_points > lo) & (self.jump_points < hi)
        return float(jumps[inside].sum())

    def value_range(self, lo: float | None = None, hi: float | None = None) -> tuple[float, float]:
        """Essential range on ``[lo, hi]``; a degenerate window uses the trace at ``lo+``."""
        lo = self.domain[0] if lo is None else lo
        hi = self.domain[1] if hi is None else hi
        if hi <= lo:
            val = self.trace_right(lo)
            return val, val
        a = self.breakpoints[:-1]
        b = self.breakpoints[1:]
        mask = (b > lo) & (a < hi)
        if not mask.any():
            val = self(lo)
            return val, val
        vals = self.values[mask]
        return float(vals.min()), float(vals.max())

    def integral(self, x):
        """``int_{lo}^{x} u``, vectorised; ``x`` is clipped to the domain."""
        x = np.clip(np.asarray(x, dtype=float), *self.domain)
        i = self._index(x)
        out = self._cum[i] + self.values[i] * (x - self.breakpoints[i])
        return float(out) if out.ndim == 0 else out

    def cell_averages(self, edges: np.ndarray) -> np.ndarray:
        edges = np.asarray(edges, dtype=float)
        return np.diff(self.integral(edges)) / np.diff(edges)

    def l1_norm(self, lo: float | None = None, hi: float | None = None) -> float:
        return l1_distance(self, PiecewiseConstantFn.constant(0.0, *self.domain), lo, hi)

    def sup_norm(self, lo: float | None = None, hi: float | None = None) -> float:
        a, b = self.value_range(lo, hi)
        return max(abs(a), abs(b))


def l1_distance(
    u: PiecewiseConstantFn, w: PiecewiseConstantFn, lo: float | None = None, hi: float | None = None
) -> float:
    """Exact ``||u - w||_{L^1([lo, hi])}`` on the merged partition (common domain by default)."""
    lo = max(u.domain[0], w.domain[0]) if lo is None else lo
    hi = min(u.domain[1], w.domain[1]) if hi is None else hi
    if hi <= lo:
        return 0.0
    grid = np.union1d(u.breakpoints, w.breakpoints)
    grid = np.concatenate(([lo], grid[(grid > lo) & (grid < hi)], [hi]))
    mid = 0.5 * (grid[:-1] + grid[1:])
    return float(np.sum(np.abs(u(mid) - w(mid)) * np.diff(grid)))


@dataclass(frozen=True)
class HullInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("hull with lo > hi")

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def issubset(self, other: "HullInterval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def inflate(self, fraction: float) -> "HullInterval":
        pad = fraction * (self.hi - self.lo)
        return HullInterval(self.lo - pad, self.hi + pad)

    @property
    def width(self) -> float:
        return self.hi - self.lo


def hull(u_o: PiecewiseConstantFn | None, *boundary: PiecewiseConstantFn, t: float | None = None) -> HullInterval:
    """Smallest closed interval holding ``u_o`` on its whole domain and every boundary datum on ``[0, t]``."""
    ranges = []
    if u_o is not None:
        ranges.append(u_o.value_range())
    for ub in boundary:
        ranges.append(ub.value_range(0.0, ub.domain[1] if t is None else t))
    if not ranges:
        raise ValueError("hull of no data")
    return HullInterval(min(r[0] for r in ranges), max(r[1] for r in ranges))


@dataclass(frozen=True)
class TVFunctionalValue:
    value: float
    t: float

    def __float__(self):
        return self.value


def tv_functional(u_o: PiecewiseConstantFn, u_b: PiecewiseConstantFn, t: float) -> TVFunctionalValue:
    """Half-line functional ``TV(u_o) + TV(u_b; [0, t]) + |u_b(0+) - u_o(0+)|``."""
    value = (
        u_o.total_variation()
        + u_b.total_variation(0.0, t)
        + abs(u_b.trace_right(0.0) - u_o.trace_right(u_o.domain[0]))
    )
    return TVFunctionalValue(value, t)


def tv_functional_segment(
    u_o: PiecewiseConstantFn, u_b1: PiecewiseConstantFn, u_b2: PiecewiseConstantFn, t: float
) -> TVFunctionalValue:
    """Segment functional with both boundary variations and both compatibility jumps."""
    lo, hi = u_o.domain
    value = (
        u_o.total_variation()
        + u_b1.total_variation(0.0, t)
        + u_b2.total_variation(0.0, t)
        + abs(u_b1.trace_right(0.0) - u_o.trace_right(lo))
        + abs(u_b2.trace_right(0.0) - u_o.trace_left(hi))
    )
    return TVFunctionalValue(value, t)


@dataclass(frozen=True)
class CompositionCheck:
    lhs: float
    rhs: float
    window_end: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12) + 1e-14


def bv_composition_bound_check(u: PiecewiseConstantFn, phi: PiecewiseConstantFn, y: float) -> CompositionCheck:
    """Check ``int_0^y |u(x + phi(x)) - u(x)| dx <= ||phi||_inf TV(u; [0, y + ||phi||_inf])``.

    ``u(x + phi(x))`` reads values up to ``y + ||phi||_inf``, so the variation
    is taken on that window; ``u`` is extended by its last value beyond its
    domain.  The left side is integrated exactly on merged partitions.
    """
    if np.any(phi.values < 0):
        raise ValueError("phi must be nonnegative")
    lhs = 0.0
    phi_sup = phi.value_range(0.0, y)[1] if y > 0 else 0.0
    pb = np.concatenate(([0.0], phi.breakpoints[(phi.breakpoints > 0) & (phi.breakpoints < y)], [y]))
    for a, b in zip(pb[:-1], pb[1:]):
        h = phi.trace_right(a)
        if h == 0.0:
            continue
        cuts = np.concatenate((u.breakpoints, u.breakpoints - h))
        grid = np.concatenate(([a], np.unique(cuts[(cuts > a) & (cuts < b)]), [b]))
        mid = 0.5 * (grid[:-1] + grid[1:])
        lhs += float(np.sum(np.abs(u(mid + h) - u(mid)) * np.diff(grid)))
    window = y + phi_sup
    return CompositionCheck(lhs, phi_sup * u.total_variation(0.0, window), window)


ProblemKind = Literal["segment", "half_line"]


@dataclass(frozen=True)
class IBVPProblem:
    """``u_t + (v(t) g(u))_x = 0`` on a segment ``[0, L]`` or a truncated half line ``[0, X_max]``.

    ``u_o`` is defined on the spatial domain; boundary data are functions of
    time on ``[0, T]``.  For the half line, the right end must lie beyond
    the reach of every wave emitted by the data before ``T``.
    """

    kind: ProblemKind
    u_o: PiecewiseConstantFn
    u_b_left: PiecewiseConstantFn
    v: SpeedProfile
    g: FluxModel
    u_b_right: PiecewiseConstantFn | None = None
    T: float | None = None

    def __post_init__(self):
        T = self.v.horizon if self.T is None else float(self.T)
        object.__setattr__(self, "T", T)
        if self.kind not in ("segment", "half_line"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if not T > 0 or self.v.horizon < T:
            raise DomainError("speed profile must cover [0, T]")
        if self.u_o.domain[0] != 0.0:
            raise DomainError("initial datum must start at x = 0")
        for ub in self.boundary_data:
            if ub.domain[0] != 0.0 or ub.domain[1] < T:
                raise DomainError("boundary data must cover [0, T]")
        if self.kind == "segment" and self.u_b_right is None:
            raise ValueError("segment problems need right boundary data")
        if self.kind == "half_line" and self.u_b_right is not None:
            raise ValueError("half-line problems take no right boundary data")
        lo, hi = self.g.working_interval
        U = self.hull()
        if U.lo < lo or U.hi > hi:
            raise DomainError(f"data range [{U.lo}, {U.hi}] leaves the working interval [{lo}, {hi}]")
        if self.kind == "half_line":
            nz = np.flatnonzero(self.u_o.values != 0.0)
            support_end = float(self.u_o.breakpoints[nz[-1] + 1]) if nz.size else 0.0
            reach = support_end + self.max_wave_speed() * T
            if self.length < reach:
                raise DomainError(
                    f"truncated half line ends at {self.length} but waves reach {reach} by T={T}"
                )

    @property
    def length(self) -> float:
        return self.u_o.domain[1]

    @property
    def boundary_data(self) -> tuple[PiecewiseConstantFn, ...]:
        if self.u_b_right is None:
            return (self.u_b_left,)
        return (self.u_b_left, self.u_b_right)

    def hull(self, t: float | None = None) -> HullInterval:
        return hull(self.u_o, *self.boundary_data, t=self.T if t is None else t)

    def tv(self, t: float) -> TVFunctionalValue:
        if self.kind == "segment":
            return tv_functional_segment(self.u_o, self.u_b_left, self.u_b_right, t)
        return tv_functional(self.u_o, self.u_b_left, t)

    def max_wave_speed(self, t: float | None = None) -> float:
        """``||v||_inf ||g'||_{L^inf(U)}`` over ``[0, t]``."""
        U = self.hull(t)
        return self.v.sup_norm(t) * self.g.derivative_sup(U.lo, U.hi)

    def time_breakpoints(self) -> np.ndarray:
        """Every time in ``[0, T]`` where the speed or a boundary datum may jump."""
        pts = [self.v.breakpoints] + [ub.breakpoints for ub in self.boundary_data]
        allpts = np.unique(np.concatenate(pts + [np.array([0.0, self.T])]))
        return allpts[(allpts >= 0.0) & (allpts <= self.T)]

    def replace(self, **changes) -> "IBVPProblem":
        return replace(self, **changes)
