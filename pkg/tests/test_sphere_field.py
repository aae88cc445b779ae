"""Tests for the Gauss-Legendre sphere grid and conformal metric geometry"""

import math

import numpy as np
import pytest

from horizonlab.core.errors import InputError
from horizonlab.services import sphere_field
from horizonlab.services.sphere_field import (
    ConformalMetric,
    ScalarField,
    area,
    div_round,
    gauss_curvature,
    get_grid,
    grad_norm_squared,
    grad_round,
    inverse_laplace_round,
    laplace_round,
    negative_curvature_integral,
    random_field,
    sh_analyze,
    sh_synthesize,
    spherical_to_cartesian,
    total_curvature,
)

FOUR_PI = 4.0 * math.pi


# ------------------------------------------------------------------------------#
# transforms
# ------------------------------------------------------------------------------#


def test_round_trip_random_coefficients(full_grid, rng):
    """Synthesis followed by analysis recovers band-limited coefficients"""
    coeffs = rng.standard_normal((13, 13)) + 1j * rng.standard_normal((13, 13))
    coeffs[:, 0] = coeffs[:, 0].real
    field = ScalarField.from_coeffs(full_grid, coeffs)
    recovered = full_grid.analyze(field.values)
    expected = full_grid.fit_coeffs(coeffs)
    err = float(np.max(np.abs(recovered - expected)))
    assert err <= 1e-10, f"round-trip error {err:.3e}"


def test_zonal_grid_shape(zonal_grid):
    """A zonal grid keeps a single longitude and the m = 0 column"""
    assert zonal_grid.shape == (13, 1), f"unexpected shape {zonal_grid.shape}"
    assert zonal_grid.mmax == 0


def test_quadrature_integrates_area(full_grid):
    """Weights sum to the round area 4 pi"""
    total = full_grid.integrate(np.ones(full_grid.shape))
    assert abs(total - FOUR_PI) <= 1e-12, f"weights sum to {total}"


def test_analyze_rejects_nonfinite(full_grid):
    """Non-finite samples are an input error"""
    values = np.zeros(full_grid.shape)
    values[0, 0] = np.nan
    with pytest.raises(InputError):
        full_grid.analyze(values)


def test_point_evaluation_matches_nodes(full_grid, rng):
    """Evaluation at the grid nodes reproduces the sampled values"""
    field = random_field(full_grid, rng)
    points = full_grid.unit_vectors()
    values = full_grid.evaluate(field.coeffs, points)
    err = float(np.max(np.abs(values - field.values)))
    assert err <= 1e-10, f"pointwise evaluation error {err:.3e}"


def test_point_gradient_of_height():
    """The gradient of z = cos(theta) is e_z minus its normal part"""
    grid = get_grid(8)
    z = ScalarField.from_function(grid, lambda theta, phi: np.cos(theta))
    points = spherical_to_cartesian(np.array([0.3, 1.2, 2.5]), np.array([0.1, 2.0, 4.0]))
    _, grad = grid.evaluate(z.coeffs, points, gradient=True)
    expected = np.array([0.0, 0.0, 1.0]) - points[:, 2:3] * points
    np.testing.assert_allclose(grad, expected, atol=1e-10, err_msg="gradient of the height function")


# ------------------------------------------------------------------------------#
# round operators
# ------------------------------------------------------------------------------#


def test_laplacian_of_first_harmonic(zonal_grid):
    """Delta cos(theta) = -2 cos(theta)"""
    f = ScalarField.from_function(zonal_grid, lambda theta, phi: np.cos(theta))
    err = float(np.max(np.abs(laplace_round(f).values + 2.0 * f.values)))
    assert err <= 1e-12, f"laplacian error {err:.3e}"


def test_sh_transform_pair(full_grid, rng):
    f = random_field(full_grid, rng, degree=8)
    back = sh_synthesize(full_grid, sh_analyze(f))
    np.testing.assert_allclose(back.values, f.values, atol=1e-12)


def test_gradient_of_height(zonal_grid):
    """grad cos(theta) = -sin(theta) e_theta"""
    f = ScalarField.from_function(zonal_grid, lambda theta, phi: np.cos(theta))
    X = grad_round(f)
    np.testing.assert_allclose(X.theta_comp[:, 0], -np.sin(zonal_grid.theta), atol=1e-12)
    np.testing.assert_allclose(X.phi_comp, 0.0, atol=1e-12)


def test_divergence_of_gradient(full_grid, rng):
    """div grad agrees with the spectral Laplacian"""
    f = random_field(full_grid, rng, degree=4)
    lap = div_round(grad_round(f))
    err = float(np.max(np.abs(lap.values - laplace_round(f).values)))
    assert err <= 1e-10, f"div grad error {err:.3e}"


def test_inverse_laplacian(full_grid, rng):
    """inverse_laplace_round inverts the Laplacian on mean-zero fields"""
    f = random_field(full_grid, rng)
    f = f - full_grid.integrate(f.values) / FOUR_PI
    back = laplace_round(inverse_laplace_round(f))
    err = float(np.max(np.abs(back.values - f.values)))
    assert err <= 1e-10, f"inverse laplacian error {err:.3e}"


def test_random_field_gradient_scale(full_grid, rng):
    """random_field normalizes sup |grad w| on the oversampled grid"""
    f = random_field(full_grid, rng, max_gradient=0.3)
    sup = math.sqrt(float(np.max(grad_norm_squared(f, full_grid.oversampled()))))
    assert abs(sup - 0.3) <= 1e-12, f"sup |grad w| = {sup}"


def test_zoo_perturbation_gradient():
    """|grad*(-cos(8 theta)/8)| = |sin(8 theta)|"""
    grid = get_grid(24, zonal=True)
    f = ScalarField.from_function(grid, lambda theta, phi: -np.cos(8.0 * theta) / 8.0)
    fine = grid.oversampled()
    norm = np.sqrt(grad_norm_squared(f, fine))
    expected = np.abs(np.sin(8.0 * fine.theta))[:, None] * np.ones(fine.shape)
    np.testing.assert_allclose(norm, expected, atol=1e-10)


# ------------------------------------------------------------------------------#
# conformal metrics
# ------------------------------------------------------------------------------#


def test_round_metric_curvature(round_w):
    """The round metric has K = 1 and area 4 pi"""
    g = ConformalMetric(round_w)
    assert np.allclose(gauss_curvature(g).values, 1.0, atol=1e-12), "K of the round sphere"
    assert abs(area(g) - FOUR_PI) <= 1e-12, f"area {area(g)}"


def test_constant_scaling(zonal_grid):
    """exp(2c) g* has area 4 pi exp(2c) and curvature exp(-2c)"""
    c = 0.5
    g = ConformalMetric(ScalarField.constant(zonal_grid, c))
    assert abs(area(g) - FOUR_PI * math.exp(2 * c)) <= 1e-10, f"scaled area {area(g)}"
    np.testing.assert_allclose(gauss_curvature(g).values, math.exp(-2 * c), atol=1e-12)


def test_gauss_bonnet_random_battery(full_grid):
    """Total curvature is 4 pi for a seeded battery of random metrics"""
    rng = np.random.default_rng(2024)
    for k in range(20):
        g = ConformalMetric(random_field(full_grid, rng, max_gradient=1.5))
        residual = abs(total_curvature(g) - FOUR_PI)
        assert residual <= 1e-8, f"metric {k}: Gauss-Bonnet residual {residual:.3e}"


def test_total_curvature_uses_gauss_curvature(full_grid, monkeypatch):
    """Shifting K_g by one adds exactly the area, so K_g and dA_g enter separately"""
    g = ConformalMetric(random_field(full_grid, np.random.default_rng(9), max_gradient=1.0))
    exact = sphere_field.gauss_curvature
    monkeypatch.setattr(
        sphere_field,
        "gauss_curvature",
        lambda metric, grid=None: ScalarField(grid or metric.grid, exact(metric, grid).values + 1.0),
    )
    assert total_curvature(g) == pytest.approx(FOUR_PI + area(g), rel=1e-10)


def test_negative_curvature_vanishes_for_round(round_w):
    """The round sphere has no negative curvature"""
    assert negative_curvature_integral(ConformalMetric(round_w)) == 0.0
