"""Speed profiles v(t), flux factors g(u) and the time-rescaling map.

The flux of every problem in this package has the product form
``v(t) * g(u)``.  Speeds are right-continuous step functions on ``[0, T]``;
smooth speeds are handled by sampling them onto a fine step profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError

#: default sampling step (s) when a smooth speed is turned into a step profile
DEFAULT_SPEED_RESOLUTION = 1e-3

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpeedProfile:
    """Right-continuous step function ``v`` on ``[0, T]`` bounded below by ``v_min``.

    ``breakpoints`` has one more entry than ``values``; the first breakpoint
    is 0 and the last is the horizon ``T``.  Piece ``i`` covers
    ``[breakpoints[i], breakpoints[i+1])`` (the last piece also contains ``T``).
    """

    breakpoints: np.ndarray
    values: np.ndarray
    v_min: float | None = None
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b = _frozen(self.breakpoints)
        vals = _frozen(self.values)
        if b.ndim != 1 or vals.ndim != 1 or b.size != vals.size + 1:
            raise ValueError("need len(breakpoints) == len(values) + 1")
        if b[0] != 0.0:
            raise ValueError("speed profiles start at t = 0")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        vmin = float(vals.min()) if self.v_min is None else float(self.v_min)
        if not vmin > 0:
            raise ValueError("v_min must be strictly positive")
        if np.any(vals < vmin) or not np.all(np.isfinite(vals)):
            raise ValueError("every speed value must be finite and >= v_min")
        cum = np.concatenate(([0.0], np.cumsum(vals * np.diff(b))))
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "v_min", vmin)
        object.__setattr__(self, "_cum", _frozen(cum))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpeedProfile):
            return NotImplemented
        return (
            np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
            and self.v_min == other.v_min
        )

    def __hash__(self) -> int:
        return hash((self.breakpoints.tobytes(), self.values.tobytes(), self.v_min))

    @classmethod
    def constant(cls, value: float, horizon: float, v_min: float | None = None) -> "SpeedProfile":
        return cls([0.0, horizon], [value], v_min)

    @classmethod
    def from_function(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        horizon: float,
        resolution: float = DEFAULT_SPEED_RESOLUTION,
        v_min: float | None = None,
    ) -> "SpeedProfile":
        """Sample a smooth speed at cell midpoints of a uniform partition."""
        n = max(1, math.ceil(horizon / resolution - 1e-9))
        b = np.linspace(0.0, horizon, n + 1)
        vals = np.asarray(fn(0.5 * (b[:-1] + b[1:])), dtype=float)
        return cls(b, vals, v_min)

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    def piece_index(self, t):
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return np.clip(idx, 0, self.values.size - 1)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.horizon):
            raise DomainError(f"time outside [0, {self.horizon}]")
        out = self.values[self.piece_index(t_arr)]
        return float(out) if out.ndim == 0 else out

    def sup_norm(self, t: float | None = None) -> float:
        """``||v||_{L^inf([0, t])}``; the whole horizon when ``t`` is None."""
        if t is None or t >= self.horizon:
            return float(self.values.max())
        if t < 0:
            raise DomainError("negative time")
        last = int(self.piece_index(t))
        # a piece that starts exactly at t has zero measure in [0, t]
        if t > 0 and self.breakpoints[last] == t:
            last -= 1
        return float(self.values[: last + 1].max())

    def gamma_inverse(self, t):
        return gamma_inverse(self, t)

    def gamma(self, tau):
        return gamma(self, tau)


def gamma_inverse(v: SpeedProfile, t):
    """Rescaled time ``int_0^t v(s) ds`` (exact for step profiles)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > v.horizon):
        raise DomainError(f"time outside [0, {v.horizon}]")
    i = v.piece_index(t_arr)
    out = v._cum[i] + v.values[i] * (t_arr - v.breakpoints[i])
    return float(out) if out.ndim == 0 else out


def gamma(v: SpeedProfile, tau):
    """Inverse of :func:`gamma_inverse`: physical time reached at rescaled time ``tau``."""
    tau_arr = np.asarray(tau, dtype=float)
    total = v._cum[-1]
    slack = 1e-12 * max(total, 1.0)
    if np.any(tau_arr < -slack) or np.any(tau_arr > total + slack):
        raise DomainError(f"rescaled time outside [0, {total}]")
    tau_arr = np.clip(tau_arr, 0.0, total)
    i = np.clip(np.searchsorted(v._cum, tau_arr, side="right") - 1, 0, v.values.size - 1)
    out = v.breakpoints[i] + (tau_arr - v._cum[i]) / v.values[i]
    out = np.minimum(out, v.horizon)
    return float(out) if out.ndim == 0 else out


def speed_l1_distance(v: SpeedProfile, w: SpeedProfile, t: float | None = None) -> float:
    """Exact ``||v - w||_{L^1([0, t])}`` on the merged breakpoint partition."""
    if v.horizon != w.horizon:
        raise DomainError("speed profiles have different horizons")
    t = v.horizon if t is None else float(t)
    if t < 0 or t > v.horizon:
        raise DomainError("time outside the common horizon")
    grid = np.union1d(v.breakpoints, w.breakpoints)
    grid = np.concatenate((grid[grid < t], [t]))
    if grid.size < 2:
        return 0.0
    mid = 0.5 * (grid[:-1] + grid[1:])
    return float(np.sum(np.abs(v(mid) - w(mid)) * np.diff(grid)))


# Mollifier kernel eta(z) = 140 (z (1 - z))^3 on [0, 1], unit mass.
def _bump_mass(z):
    """Antiderivative of the kernel, 0 at z <= 0 and 1 at z >= 1."""
    z = np.clip(z, 0.0, 1.0)
    return 140.0 * (z**4 / 4 - 3 * z**5 / 5 + z**6 / 2 - z**7 / 7)


@dataclass(frozen=True)
class MollifiedSpeed:
    """``v_n = (vbar * eta_n)`` restricted to ``[0, T]``, where ``vbar`` extends ``v`` by ``v_min``.

    The kernel ``eta_n(s) = n eta(n s)`` lives on ``[0, 1/n]``, so ``v_n(t)``
    averages ``vbar`` over ``[t - 1/n, t]``.  Evaluation is exact because
    ``v`` is a step function and the kernel antiderivative is a polynomial.
    """

    profile: SpeedProfile
    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("n must be a positive integer")

    def __call__(self, t):
        v = self.profile
        t_arr = np.asarray(t, dtype=float)
        n = float(self.n)
        # contribution of vbar = v_min on t < 0: s in (t, inf)
        out = v.v_min * (1.0 - _bump_mass(n * t_arr))
        a = v.breakpoints[:-1]
        b = v.breakpoints[1:]
        flat = np.atleast_1d(t_arr).ravel()
        acc = np.empty_like(flat)
        for s in range(0, flat.size, 2048):
            tt = flat[s : s + 2048, None]
            weights = _bump_mass(n * (tt - a)) - _bump_mass(n * (tt - b))
            acc[s : s + 2048] = weights @ v.values
        out = out + acc.reshape(t_arr.shape)
        return float(out) if np.ndim(out) == 0 else out

    def kinks(self) -> np.ndarray:
        """Points where the polynomial pieces of ``v_n`` change."""
        v = self.profile
        pts = np.concatenate((v.breakpoints, v.breakpoints + 1.0 / self.n))
        pts = pts[(pts >= 0) & (pts <= v.horizon)]
        return np.unique(np.concatenate(([0.0, v.horizon], pts)))

    def l1_distance(self, other: SpeedProfile | None = None) -> float:
        """``||v_n - other||_{L^1([0, T])}`` by Gauss-Legendre on the smooth pieces."""
        other = self.profile if other is None else other
        pts = np.union1d(self.kinks(), other.breakpoints)
        pts = pts[pts <= self.profile.horizon]
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            # four sub-panels per piece keep sign changes of v_n - v well resolved
            for a, b in zip(np.linspace(lo, hi, 5)[:-1], np.linspace(lo, hi, 5)[1:]):
                x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
                total += 0.5 * (b - a) * float(np.sum(_GL_WEIGHTS * np.abs(self(x) - other(x))))
        return total

    def to_profile(self, resolution: float = DEFAULT_SPEED_RESOLUTION) -> SpeedProfile:
        return SpeedProfile.from_function(self, self.profile.horizon, resolution, self.profile.v_min)


def mollify_speed(v: SpeedProfile, n: int) -> MollifiedSpeed:
    return MollifiedSpeed(v, int(n))


class FluxModel:
    """The density-dependent factor ``g`` of the flux ``v(t) g(u)``.

    ``critical_points`` lists the zeros of ``g'`` inside the working interval;
    together with interval endpoints they locate the extrema needed by the
    Godunov flux.  Without them, extrema fall back to dense sampling.
    """

    quadratic_coeffs: tuple[float, float] | None = None

    def __init__(
        self,
        evaluate: Callable,
        derivative: Callable,
        working_interval: tuple[float, float],
        critical_points: Sequence[float] | None = None,
    ):
        lo, hi = map(float, working_interval)
        if not lo <= hi:
            raise ValueError("empty working interval")
        self._g = evaluate
        self._dg = derivative
        self.working_interval = (lo, hi)
        self.critical_points = None if critical_points is None else tuple(map(float, critical_points))

    def __call__(self, u):
        return self._g(u)

    def evaluate(self, u):
        return self._g(u)

    def derivative(self, u):
        return self._dg(u)

    def _candidates(self, lo: float, hi: float) -> np.ndarray:
        pts = [lo, hi]
        if self.critical_points is None:
            pts.extend(np.linspace(lo, hi, 1025)[1:-1])
        else:
            pts.extend(c for c in self.critical_points if lo < c < hi)
        return np.asarray(pts, dtype=float)

    def interval_min(self, lo: float, hi: float) -> float:
        return float(np.min(self._g(self._candidates(lo, hi))))

    def interval_max(self, lo: float, hi: float) -> float:
        return float(np.max(self._g(self._candidates(lo, hi))))

    def godunov(self, left: float, right: float) -> float:
        """Godunov flux of ``g`` between a left and a right state."""
        if left <= right:
            return self.interval_min(left, right)
        return self.interval_max(right, left)

    def derivative_sup(self, lo: float | None = None, hi: float | None = None) -> float:
        """``||g'||_{L^inf([lo, hi])}``; the working interval by default."""
        lo = self.working_interval[0] if lo is None else float(lo)
        hi = self.working_interval[1] if hi is None else float(hi)
        x = np.linspace(lo, hi, 2049)
        return float(np.max(np.abs(self._dg(x))))

    def derivative_difference_sup(self, other: "FluxModel", lo: float, hi: float) -> float:
        """``||g' - other'||_{L^inf([lo, hi])}``."""
        x = np.linspace(lo, hi, 2049)
        return float(np.max(np.abs(self._dg(x) - other.derivative(x))))


class QuadraticFlux(FluxModel):
    """``g(u) = a u + b u^2``; covers linear advection and the LWR flux.

    Extrema and derivative norms are computed in closed form, and the
    compiled time-stepping kernel accepts this family directly.
    """

    def __init__(self, a: float, b: float, working_interval: tuple[float, float]):
        self.a = float(a)
        self.b = float(b)
        crit = () if self.b == 0 else (-self.a / (2 * self.b),)
        super().__init__(self._quad, self._dquad, working_interval, crit)
        self.quadratic_coeffs = (self.a, self.b)

    def _quad(self, u):
        return self.a * u + self.b * u * u

    def _dquad(self, u):
        return self.a + 2.0 * self.b * u

    def derivative_sup(self, lo=None, hi=None):
        lo = self.working_interval[0] if lo is None else float(lo)
        hi = self.working_interval[1] if hi is None else float(hi)
        return max(abs(self._dquad(lo)), abs(self._dquad(hi)))

    def derivative_difference_sup(self, other, lo, hi):
        if other.quadratic_coeffs is None:
            return super().derivative_difference_sup(other, lo, hi)
        a2, b2 = other.quadratic_coeffs
        da, db = self.a - a2, self.b - b2
        return max(abs(da + 2 * db * lo), abs(da + 2 * db * hi))

    def __repr__(self):
        return f"QuadraticFlux(a={self.a!r}, b={self.b!r}, working_interval={self.working_interval!r})"


class LWRFlux(QuadraticFlux):
    """``g(u) = u (1 - u / R)`` with maximal density ``R``."""

    def __init__(self, R: float):
        if not R > 0:
            raise ValueError("maximal density must be positive")
        self.R = float(R)
        super().__init__(1.0, -1.0 / self.R, (0.0, self.R))

    def __repr__(self):
        return f"LWRFlux(R={self.R!r})"


def linear_flux(speed: float = 1.0, working_interval=(-1e6, 1e6)) -> QuadraticFlux:
    return QuadraticFlux(speed, 0.0, working_interval)
