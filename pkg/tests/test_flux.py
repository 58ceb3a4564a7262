import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from tdflux.errors import DomainError
from tdflux.flux import (
    FluxModel,
    LWRFlux,
    SpeedProfile,
    gamma,
    gamma_inverse,
    linear_flux,
    mollify_speed,
    speed_l1_distance,
)


@st.composite
def profiles(draw, max_pieces=10, horizon=None):
    n = draw(st.integers(1, max_pieces))
    T = horizon if horizon is not None else draw(st.floats(0.5, 50.0))
    cuts = draw(st.lists(st.floats(0.01, 0.99), min_size=n - 1, max_size=n - 1, unique=True))
    bps = np.concatenate(([0.0], np.sort(cuts) * T, [T]))
    if np.any(np.diff(bps) <= 1e-9 * T):
        bps = np.linspace(0.0, T, n + 1)
    vals = draw(st.lists(st.floats(0.1, 30.0), min_size=n, max_size=n))
    return SpeedProfile(bps, vals)


def quad_steps(fn, lo, hi, points):
    pts = sorted(p for p in points if lo < p < hi)
    edges = [lo, *pts, hi]
    return sum(integrate.quad(fn, a, b, limit=200)[0] for a, b in zip(edges[:-1], edges[1:]))


# -- SpeedProfile -----------------------------------------------------------


def test_profile_is_right_continuous():
    v = SpeedProfile([0, 1, 2], [1.0, 3.0])
    assert v(0.999999) == 1.0
    assert v(1.0) == 3.0
    assert v(2.0) == 3.0


def test_profile_rejects_bad_data():
    with pytest.raises(ValueError):
        SpeedProfile([0, 1, 1], [1.0, 2.0])
    with pytest.raises(ValueError):
        SpeedProfile([0, 1], [0.0])
    with pytest.raises(ValueError):
        SpeedProfile([0, 1, 2], [1.0, 2.0], v_min=1.5)
    with pytest.raises(ValueError):
        SpeedProfile([0.5, 1], [1.0])


def test_profile_query_outside_horizon():
    v = SpeedProfile.constant(2.0, 10.0)
    with pytest.raises(DomainError):
        v(10.5)
    with pytest.raises(DomainError):
        gamma_inverse(v, -1.0)


def test_sup_norm_ignores_piece_starting_at_window_end():
    v = SpeedProfile([0, 1, 2], [1.0, 3.0])
    assert v.sup_norm(1.0) == 1.0
    assert v.sup_norm(1.5) == 3.0
    assert v.sup_norm() == 3.0


# -- gamma ----------------------------------------------------------------------


def test_gamma_inverse_constant():
    assert gamma_inverse(SpeedProfile.constant(2.0, 10.0), 3.0) == 6.0


def test_gamma_inverse_at_zero():
    v = SpeedProfile([0, 0.3, 1], [5.0, 0.5])
    assert gamma_inverse(v, 0.0) == 0.0


def test_gamma_inverse_two_pieces_against_quadrature():
    v = SpeedProfile([0, 1, 2], [1.0, 3.0])
    ref = quad_steps(lambda s: v(s), 0.0, 1.5, [1.0])
    assert gamma_inverse(v, 1.5) == pytest.approx(2.5, abs=1e-15)
    assert ref == pytest.approx(2.5, abs=1e-12)


def test_gamma_constant_and_endpoint():
    v = SpeedProfile.constant(2.0, 10.0)
    assert gamma(v, 6.0) == 3.0
    w = SpeedProfile([0, 0.4, 1.7, 3.0], [2.0, 0.3, 1.1])
    assert gamma(w, gamma_inverse(w, 3.0)) == pytest.approx(3.0, abs=1e-15)


@given(profiles(), st.integers(0, 2**32 - 1))
def test_gamma_round_trip(v, seed):
    t = np.random.default_rng(seed).uniform(0.0, v.horizon, 100)
    back = gamma(v, gamma_inverse(v, t))
    assert np.max(np.abs(back - t)) < 1e-12 * v.horizon


@given(profiles(), st.integers(0, 2**32 - 1))
def test_gamma_inverse_monotone_and_lipschitz(v, seed):
    t = np.sort(np.random.default_rng(seed).uniform(0.0, v.horizon, 60))
    tau = gamma_inverse(v, t)
    assert np.all(np.diff(tau) > 0)
    assert np.all(np.diff(tau) <= v.sup_norm() * np.diff(t) * (1 + 1e-12) + 1e-12)


@given(profiles(horizon=5.0), profiles(horizon=5.0), st.floats(0.0, 5.0))
def test_gamma_inverse_gap_bounded_by_speed_distance(v, w, t):
    gap = abs(gamma_inverse(v, t) - gamma_inverse(w, t))
    assert gap <= speed_l1_distance(v, w, t) * (1 + 1e-12) + 1e-12


# -- L1 distance ---------------------------------------------------------------


def test_speed_distance_trivial_cases():
    v = SpeedProfile([0, 1, 4], [2.0, 5.0])
    assert speed_l1_distance(v, v, 4.0) == 0.0
    assert speed_l1_distance(SpeedProfile.constant(2.0, 4.0), SpeedProfile.constant(3.0, 4.0), 4.0) == 4.0


def test_speed_distance_mismatched_horizons():
    with pytest.raises(DomainError):
        speed_l1_distance(SpeedProfile.constant(1.0, 4.0), SpeedProfile.constant(1.0, 5.0))


def test_speed_distance_against_quadrature(rng):
    for _ in range(20):
        pair = []
        for _ in range(2):
            bps = np.concatenate(([0.0], np.sort(rng.uniform(0, 7, 4)), [7.0]))
            pair.append(SpeedProfile(bps, rng.uniform(0.2, 3.0, 5)))
        v, w = pair
        t = float(rng.uniform(1, 7))
        ref = quad_steps(lambda s: abs(v(s) - w(s)), 0.0, t, list(v.breakpoints) + list(w.breakpoints))
        assert abs(speed_l1_distance(v, w, t) - ref) < 1e-10


# -- mollifier -----------------------------------------------------------------


def test_mollifier_kernel_has_unit_mass():
    mass = integrate.quad(lambda z: 140 * (z * (1 - z)) ** 3, 0, 1)[0]
    assert mass == pytest.approx(1.0, abs=1e-14)


def test_mollified_constant_is_constant():
    v = SpeedProfile.constant(1.7, 3.0)
    for n in (1, 4, 50):
        t = np.linspace(0, 3, 101)
        assert np.allclose(mollify_speed(v, n)(t), 1.7, rtol=0, atol=1e-13)


def test_mollified_value_against_convolution_quadrature():
    v = SpeedProfile([0, 0.5, 1.2, 2.0], [1.0, 3.0, 2.0], v_min=0.8)
    n = 3
    vn = mollify_speed(v, n)

    def vbar(s):
        return v.v_min if s < 0 else v(min(s, v.horizon))

    for t in (0.0, 0.1, 0.6, 1.3, 2.0):
        ref = quad_steps(
            lambda s: n * 140 * (n * s * (1 - n * s)) ** 3 * vbar(t - s), 0.0, 1.0 / n, [t - 0.5, t - 1.2, t]
        )
        assert vn(t) == pytest.approx(ref, abs=1e-12)


@st.composite
def floored_profiles(draw):
    v = draw(profiles(max_pieces=6))
    floor = draw(st.floats(0.05, 1.0)) * float(v.values.min())
    return SpeedProfile(v.breakpoints, v.values, v_min=floor)


@given(floored_profiles(), st.integers(1, 40))
def test_mollified_range(v, n):
    t = np.linspace(0, v.horizon, 401)
    vals = mollify_speed(v, n)(t)
    assert vals.min() >= v.v_min * (1 - 1e-12)
    assert vals.max() <= v.sup_norm() * (1 + 1e-12)


def test_mollified_l1_distance_decreases():
    v = SpeedProfile([0, 1.0, 2.0], [1.0, 2.0])
    d8 = mollify_speed(v, 8).l1_distance()
    d16 = mollify_speed(v, 16).l1_distance()
    assert d16 < d8
    ref = quad_steps(lambda s: abs(mollify_speed(v, 8)(s) - v(s)), 0.0, 2.0, [1.0, 1.125, 0.125])
    assert d8 == pytest.approx(ref, rel=1e-9)


# -- flux models ---------------------------------------------------------------


def test_lwr_flux_shape():
    g = LWRFlux(0.2)
    assert g(0.1) == pytest.approx(0.05)
    assert g(0.0) == 0.0 and g(0.2) == 0.0
    assert g.derivative_sup() == pytest.approx(1.0)
    assert g.derivative_sup(0.05, 0.1) == pytest.approx(0.5)


def _brute_godunov(g, a, b):
    u = np.linspace(min(a, b), max(a, b), 20001)
    vals = g.evaluate(u)
    return vals.min() if a <= b else vals.max()


@given(st.floats(0, 1), st.floats(0, 1))
def test_godunov_matches_brute_force(a, b):
    for g in (LWRFlux(1.0), FluxModel(lambda u: np.sin(3 * u), lambda u: 3 * np.cos(3 * u), (0, 1))):
        assert g.godunov(a, b) == pytest.approx(_brute_godunov(g, a, b), abs=1e-6)


def test_quadratic_closed_forms_match_sampling():
    g = LWRFlux(1.3)
    generic = FluxModel(g.evaluate, g.derivative, g.working_interval)
    assert g.derivative_sup(0.2, 1.1) == pytest.approx(generic.derivative_sup(0.2, 1.1), rel=1e-12)
    h = linear_flux(0.7, (0, 2))
    assert g.derivative_difference_sup(h, 0.0, 1.3) == pytest.approx(
        FluxModel.derivative_difference_sup(g, h, 0.0, 1.3), rel=1e-12
    )
