"""Tests for the collar metric over a path"""

import math

import numpy as np
import pytest

from horizonlab.core.errors import InputError, NumericalError
from horizonlab.services.collar import (
    block_scalar_curvature,
    bound_terms,
    build_collar,
    closed_form_traces,
    collar_report,
    finite_difference_traces,
    make_collar,
    rescale_warp,
    scalar_curvature_collar,
    select_parameters,
    slice_mean_curvature,
    trace_residual,
    warped_terms,
)
from horizonlab.services.metric_path import build_path
from horizonlab.services.profiles import schwarzschild_exact
from horizonlab.services.sphere_field import ScalarField, get_grid

N_TIME = 16
EPS = 0.05


@pytest.fixture(scope="module")
def round_path(round_w):
    return build_path(round_w, n_time=N_TIME)


@pytest.fixture(scope="module")
def round_collar(round_path):
    return make_collar(round_path, EPS, 2.0)


# ------------------------------------------------------------------------------#
# block formula on warped products
# ------------------------------------------------------------------------------#


def test_block_formula_round():
    """f = sin s gives the unit 3-sphere"""
    s = np.linspace(0.2, 2.9, 50)
    R = block_scalar_curvature(**warped_terms(np.sin(s), np.cos(s), -np.sin(s)))
    np.testing.assert_allclose(R, 6.0, atol=1e-12, err_msg="R of the round 3-sphere")


def test_block_formula_flat():
    s = np.linspace(0.2, 5.0, 50)
    R = block_scalar_curvature(**warped_terms(s, np.ones_like(s), np.zeros_like(s)))
    np.testing.assert_allclose(R, 0.0, atol=1e-12)


def test_block_formula_schwarzschild():
    """The exact Schwarzschild profile is scalar-flat through the block formula"""
    s = np.linspace(0.1, 30.0, 200)
    u, du, ddu = schwarzschild_exact(1.0)(s)
    R = block_scalar_curvature(**warped_terms(u, du, ddu))
    assert np.max(np.abs(R)) <= 1e-10, f"max |R| = {np.max(np.abs(R)):.3e}"


# ------------------------------------------------------------------------------#
# construction
# ------------------------------------------------------------------------------#


def test_make_collar_validates(round_path):
    with pytest.raises(InputError):
        make_collar(round_path, 0.0, 1.0)
    with pytest.raises(InputError):
        make_collar(round_path, 0.2, 1.0, epsilon_0=0.1)
    with pytest.raises(InputError):
        make_collar(round_path, 0.05, 1.0, A_0=2.0)


def test_collar_needs_eigen_data(round_w):
    path = build_path(round_w, n_time=N_TIME, with_eigen=False)
    with pytest.raises(InputError):
        make_collar(path, EPS, 1.0)


def test_with_epsilon(round_collar):
    smaller = round_collar.with_epsilon(0.5 * EPS)
    assert smaller.epsilon == 0.5 * EPS and smaller.A == round_collar.A
    with pytest.raises(InputError):
        round_collar.with_epsilon(2.0 * EPS)


def test_rescale_warp(round_collar):
    """The warp is kept; A is absorbed"""
    rescaled = rescale_warp(round_collar)
    assert rescaled.A == 1.0 and rescaled.rescaled
    np.testing.assert_array_equal(rescaled.warp, round_collar.warp)
    assert rescale_warp(rescaled) is rescaled
    assert rescaled.T == pytest.approx(float(np.mean(round_collar.warp[-1])))


# ------------------------------------------------------------------------------#
# traces and curvature over the round path
# ------------------------------------------------------------------------------#


def test_traces_agree(round_collar):
    """Finite-difference and closed-form traces coincide on a static path"""
    fd_dot, fd_ddot, norm_sq = finite_difference_traces(round_collar)
    cf_dot, cf_ddot = closed_form_traces(round_collar)
    t = round_collar.times[:, None, None]
    s = 1.0 + EPS * t ** 2
    np.testing.assert_allclose(fd_dot, cf_dot, atol=1e-9)
    np.testing.assert_allclose(fd_ddot, cf_ddot, atol=1e-7)
    np.testing.assert_allclose(norm_sq, np.broadcast_to(8.0 * (EPS * t / s) ** 2, norm_sq.shape), atol=1e-9)
    assert trace_residual(round_collar) <= 1e-7


def test_closed_form_traces_need_constant_area(round_collar):
    with pytest.raises(NumericalError):
        closed_form_traces(round_collar, tolerance=-1.0)


def test_round_collar_curvature(round_collar):
    """R = 2/s + v^-2 (-4 eps / s + 2 eps^2 t^2 / s^2) with s = 1 + eps t^2"""
    R = scalar_curvature_collar(round_collar)
    t = round_collar.times[:, None, None]
    s = 1.0 + EPS * t ** 2
    v = round_collar.warp
    expected = 2.0 / s + (-4.0 * EPS / s + 2.0 * EPS ** 2 * t ** 2 / s ** 2) / v ** 2
    np.testing.assert_allclose(R, expected, atol=1e-6, err_msg="collar curvature over the round path")


def test_slice_mean_curvature(round_collar):
    """The bottom slice is minimal; later slices are mean-convex"""
    assert np.max(np.abs(slice_mean_curvature(round_collar, 0.0))) == 0.0
    assert np.min(slice_mean_curvature(round_collar, 0.7)) > 0
    with pytest.raises(InputError):
        slice_mean_curvature(round_collar, 1.5)


# ------------------------------------------------------------------------------#
# parameter selection
# ------------------------------------------------------------------------------#


def test_bound_terms_round(round_path):
    terms = bound_terms(round_path)
    assert terms.min_lambda == pytest.approx(1.0, abs=1e-8)
    assert terms.sup_trace_gddot <= 1e-8
    assert terms.sup_log_u_rate <= 1e-8


def test_select_parameters(round_path):
    """eps_0 is 90% of the cap; the bound is positive at A_0"""
    epsilon_0, A_0 = select_parameters(round_path, epsilon_cap=0.1)
    assert epsilon_0 == pytest.approx(0.09)
    assert bound_terms(round_path).bound(A_0, epsilon_0) > 0


def test_select_parameters_rejects_bad_cap(round_path):
    with pytest.raises(InputError):
        select_parameters(round_path, epsilon_cap=0.0)


@pytest.mark.parametrize("fraction", [0.5, 0.25])
def test_smaller_epsilon_stays_positive(round_path, fraction):
    """Shrinking eps below eps_0 at the same A keeps the bound and R positive"""
    epsilon_0, A_0 = select_parameters(round_path, epsilon_cap=0.1)
    epsilon = fraction * epsilon_0
    assert bound_terms(round_path).bound(A_0, epsilon) > 0
    report = collar_report(make_collar(round_path, epsilon, A_0))
    assert report.min_R > 0, f"eps = {epsilon}: min R = {report.min_R}"


def test_build_collar_round(round_path):
    """On the round path the selected A_0 already gives R > 0"""
    collar = build_collar(round_path, epsilon_cap=0.1)
    assert collar.A == collar.A_0
    report = collar_report(collar)
    assert report.min_R > 0, f"min R = {report.min_R}"
    assert report.bound_margin > 0
    assert report.H0_residual == 0.0
    assert report.second_fundamental_form_norm <= 1e-8
    assert report.min_H[0] == 0.0 and min(report.min_H[1:]) > 0


@pytest.mark.slow
def test_build_collar_cos_metric():
    """w = cos(theta)/2 at moderate resolution gets a positive collar"""
    grid = get_grid(16, zonal=True)
    w = ScalarField.from_function(grid, lambda theta, phi: 0.5 * np.cos(theta))
    path = build_path(w, n_time=32)
    collar = build_collar(path)
    report = collar_report(collar)
    assert report.min_R > 0, f"min R = {report.min_R}"
    assert report.H0_residual <= 1e-8
    assert math.isfinite(report.trace_residual) and report.trace_residual <= 0.1
