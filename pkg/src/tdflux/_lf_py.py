"""Numpy implementation of the Lax-Friedrichs march; same contract as the compiled kernel."""

import numpy as np


def _godunov_quadratic(p, q, a, b):
    g = lambda x: a * x + b * x * x  # noqa: E731
    lo, hi = min(p, q), max(p, q)
    glo, ghi = g(lo), g(hi)
    inside = b != 0.0 and lo < -a / (2.0 * b) < hi
    if p <= q:
        out = min(glo, ghi)
        if b > 0.0 and inside:
            out = g(-a / (2.0 * b))
    else:
        out = max(glo, ghi)
        if b < 0.0 and inside:
            out = g(-a / (2.0 * b))
    return out


def advance(u, n_steps, lam, a, b, left_datum, right_datum, right_free):
    """March ``n_steps`` equal steps in place; return summed ``lam * F`` at both ends."""
    n = u.shape[0]
    half_inv = 0.5 / lam
    F = np.empty(n + 1)
    gv = np.empty(n)
    s_in = 0.0
    s_out = 0.0
    for _ in range(n_steps):
        np.multiply(u, b, out=gv)
        gv += a
        gv *= u
        F[0] = _godunov_quadratic(left_datum, u[0], a, b)
        F[n] = gv[n - 1] if right_free else _godunov_quadratic(u[n - 1], right_datum, a, b)
        F[1:n] = 0.5 * (gv[:-1] + gv[1:]) - half_inv * (u[1:] - u[:-1])
        u -= lam * np.diff(F)
        s_in += lam * F[0]
        s_out += lam * F[n]
    return s_in, s_out


def advance_generic(u, n_steps, lam, g, left_datum, right_datum, right_free):
    """Same march for an arbitrary :class:`~tdflux.flux.FluxModel`."""
    n = u.shape[0]
    half_inv = 0.5 / lam
    F = np.empty(n + 1)
    s_in = 0.0
    s_out = 0.0
    for _ in range(n_steps):
        gv = np.asarray(g.evaluate(u), dtype=float)
        F[0] = g.godunov(left_datum, float(u[0]))
        F[n] = gv[n - 1] if right_free else g.godunov(float(u[n - 1]), right_datum)
        F[1:n] = 0.5 * (gv[:-1] + gv[1:]) - half_inv * (u[1:] - u[:-1])
        u -= lam * np.diff(F)
        s_in += lam * F[0]
        s_out += lam * F[n]
    return s_in, s_out
