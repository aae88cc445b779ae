"""Tests for warped-product profiles: curvature, Schwarzschild, bending, matching and gluing"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from horizonlab.core.errors import InputError
from horizonlab.services.profiles import (
    OmegaBound,
    Profile,
    bend,
    collar_tail,
    glue,
    match_epsilon,
    mean_curvature_1d,
    profile_table,
    psc_margin,
    psc_test,
    required_epsilon,
    scalar_curvature_1d,
    schwarzschild_arclength,
    schwarzschild_exact,
    schwarzschild_profile,
    schwarzschild_radius,
    tail_slope,
    translation_gap,
)

MASS = 0.55
T, RHO, EPS0 = 0.5, 1.0, 0.09


@pytest.fixture(scope="module")
def bent():
    s0 = 0.5 * MASS
    return bend(MASS, s0, s0 / 3.0, amplitude=0.25, scale=None)


@pytest.fixture(scope="module")
def matched(bent):
    eps = match_epsilon(float(bent.df[0]), T, RHO, EPS0)
    return eps, collar_tail(eps, T, RHO)


# ------------------------------------------------------------------------------#
# curvature oracles
# ------------------------------------------------------------------------------#


def test_flat_profile_is_scalar_flat():
    """f(s) = s is Euclidean space: R = 0"""
    s = np.linspace(0.1, 10.0, 501)
    R = scalar_curvature_1d(Profile(s, s, np.ones_like(s), np.zeros_like(s)))
    assert np.max(np.abs(R)) <= 1e-12, f"max |R| = {np.max(np.abs(R)):.3e}"


def test_round_profile_has_curvature_six():
    """f(s) = sin s is the unit 3-sphere: R = 6"""
    s = np.linspace(0.1, math.pi - 0.1, 501)
    R = scalar_curvature_1d(Profile(s, np.sin(s), np.cos(s), -np.sin(s)))
    assert np.max(np.abs(R - 6.0)) <= 1e-10, f"max |R - 6| = {np.max(np.abs(R - 6.0)):.3e}"


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0])
def test_schwarzschild_is_scalar_flat(m):
    """The integrated Schwarzschild profile has R = 0"""
    p = schwarzschild_profile(m, 20.0 * m)
    R = scalar_curvature_1d(p)
    assert np.max(np.abs(R)) <= 1e-8, f"m={m}: max |R| = {np.max(np.abs(R)):.3e}"
    assert p.consistency_residual() < 1e-2, f"m={m}: samples inconsistent with f'"


def test_omega_bound_equality_for_schwarzschild():
    """u'' sits exactly on the sup of the admissible set"""
    u, du, ddu = schwarzschild_exact(1.0)(np.array([0.5, 2.0, 10.0]))
    for a, b, c in zip(u, du, ddu):
        bound = OmegaBound(float(a), float(b))
        assert abs(bound.sup - c) <= 1e-12, f"sup {bound.sup} vs u'' {c}"
        assert not bound.contains(float(c))


def test_omega_bound_rejects_nonpositive_alpha():
    with pytest.raises(InputError):
        OmegaBound(0.0, 0.5)


def test_psc_margin_sign():
    """sin is strictly scalar-positive; a concave-up fast profile is not"""
    s = np.linspace(0.1, 1.0, 101)
    assert psc_test(Profile(s, np.sin(s), np.cos(s), -np.sin(s)))
    assert not psc_test(Profile(s, np.exp(s), np.exp(s), np.exp(s)))


def test_profile_table_columns():
    """Rows carry s, f, f', f'', R, margin and H"""
    s = np.linspace(0.5, 1.0, 11)
    table = profile_table(Profile(s, s, np.ones_like(s), np.zeros_like(s)))
    assert table.shape == (11, 7), f"table shape {table.shape}"
    np.testing.assert_allclose(table[:, 6], 2.0 / s, err_msg="mean curvature column")


def test_profile_rejects_unsorted_samples():
    s = np.array([0.0, 1.0, 0.5])
    with pytest.raises(InputError):
        Profile(s, s, s, s)


# ------------------------------------------------------------------------------#
# Schwarzschild
# ------------------------------------------------------------------------------#


def test_horizon_radius():
    """u_m(0) = 2m"""
    assert schwarzschild_radius(1.0, 0.0) == pytest.approx(2.0, abs=1e-14)
    p = schwarzschild_profile(1.0, 5.0)
    assert abs(p.f[0] - 2.0) <= 1e-14 and p.df[0] == 0.0


def test_asymptotic_slope():
    """u_m' increases towards 1"""
    _, du, _ = schwarzschild_exact(1.0)(np.array([1.0, 10.0, 100.0, 1000.0]))
    assert np.all(np.diff(du) > 0), f"slopes {du}"
    assert 1.0 - du[-1] <= 2e-3, f"u'(1000 m) = {du[-1]}"


@pytest.mark.parametrize("m", [0.5, 2.0])
def test_arclength_quadrature(m):
    """Closed-form arclength matches direct quadrature of (1 - 2m/r)^(-1/2)"""
    for u in (2.5 * m, 5.0 * m, 40.0 * m):
        direct = quad(lambda r: 1.0 / math.sqrt(1.0 - 2.0 * m / r), 2.0 * m, u, epsabs=1e-13, limit=200)[0]
        closed = float(schwarzschild_arclength(m, u))
        assert abs(direct - closed) <= 1e-8, f"u={u}: {direct} vs {closed}"


def test_radius_inverts_arclength():
    u = np.linspace(2.0, 200.0, 401)
    back = schwarzschild_radius(1.0, schwarzschild_arclength(1.0, u))
    np.testing.assert_allclose(back, u, rtol=1e-10, err_msg="radius(arclength(u)) != u")


def test_integrated_profile_matches_closed_form():
    p = schwarzschild_profile(1.0, 30.0)
    u, du, _ = schwarzschild_exact(1.0)(p.s)
    assert np.max(np.abs(p.f - u)) <= 1e-9, f"max |u - u_exact| = {np.max(np.abs(p.f - u)):.3e}"
    assert np.max(np.abs(p.df - du)) <= 1e-7


def test_negative_arclength_rejected():
    with pytest.raises(InputError):
        schwarzschild_radius(1.0, np.array([-0.1]))


# ------------------------------------------------------------------------------#
# bending
# ------------------------------------------------------------------------------#


def test_bent_profile_positive(bent):
    """Strictly positive curvature where bent; Schwarzschild from s0 on"""
    e, _ = bent.evaluator.excess(bent.s)
    active = e > 0
    assert np.any(active), "bump must be active below s0"
    assert np.all(psc_margin(bent)[active] > 0), "bent window must be scalar-positive"
    assert np.all(bent.ddf > 0) and np.all(bent.df > 0), "bent profile must be convex and increasing"

    above = bent.s >= bent.params["s0"]
    u, du, _ = schwarzschild_exact(MASS)(bent.s[above])
    np.testing.assert_allclose(bent.f[above], u, atol=1e-12, err_msg="bent profile above s0")
    np.testing.assert_allclose(bent.df[above], du, atol=1e-12)


def test_bend_steepens_below_s0(bent):
    """theta > 1 makes the bent slope exceed the Schwarzschild slope at the same radius"""
    _, du, _ = schwarzschild_exact(MASS)(bent.evaluator.sigma(bent.s[:1]))
    assert bent.df[0] > du[0], f"{bent.df[0]} <= {du[0]}"


def test_bend_validates_window():
    with pytest.raises(InputError):
        bend(1.0, 0.5, 0.6)
    with pytest.raises(InputError):
        bend(1.0, 0.5, 0.1, amplitude=0.0)


# ------------------------------------------------------------------------------#
# matching and gluing
# ------------------------------------------------------------------------------#


def test_tail_slope_inverse():
    """required_epsilon inverts tail_slope"""
    for eps in (1e-3, 0.05, 0.3):
        assert required_epsilon(tail_slope(eps, T, RHO), T, RHO) == pytest.approx(eps, rel=1e-12)


def test_match_epsilon(bent, matched):
    eps, tail = matched
    assert 0 < eps <= EPS0
    assert abs(tail.df[-1] - bent.df[0]) <= 1e-10, f"slopes {tail.df[-1]} vs {bent.df[0]}"


def test_match_epsilon_infeasible():
    """A slope beyond f'_eps0(T) reports the epsilon it would need"""
    with pytest.raises(InputError) as info:
        match_epsilon(10.0, T, RHO, EPS0)
    assert info.value.details["required_epsilon"] > EPS0


def test_translation_gap():
    assert translation_gap(1.0, 1.5, 0.25) == pytest.approx(2.0)


def test_glue_neck(bent, matched):
    """The glued neck keeps f, f' > 0 and nonnegative scalar curvature"""
    _, tail = matched
    neck = glue(tail, bent)
    assert np.all(neck.f > 0) and np.all(neck.df > 0)
    assert np.min(psc_margin(neck)) >= -1e-10, f"min margin {np.min(psc_margin(neck)):.3e}"

    protected = neck.s <= 0.5 * (tail.a + tail.b)
    np.testing.assert_allclose(neck.f[protected], tail.at(neck.s[protected])[0], atol=1e-14)

    shift = neck.params["shift"]
    far = neck.s >= shift + bent.a + 0.25 * (bent.b - bent.a) + 1e-12
    f_far, _, _ = bent.at(neck.s[far] - shift)
    np.testing.assert_allclose(neck.f[far], f_far, atol=1e-12, err_msg="neck must end on the bent profile")


def test_glue_mean_curvature(bent, matched):
    """Slices of the neck are mean-convex"""
    neck = glue(matched[1], bent)
    H = mean_curvature_1d(neck, neck.s)
    assert np.all(H > 0)


def test_glue_rejects_mismatched_slopes(bent):
    tail = collar_tail(0.01, T, RHO)
    with pytest.raises(InputError):
        glue(tail, bent)
