"""Tests for the stability operator and M+ certificates"""

import math

import numpy as np
import pytest

from horizonlab.core.config import settings
from horizonlab.core.errors import InputError, MembershipError
from horizonlab.models.responses import CertificateKind
from horizonlab.services.sphere_field import (
    ConformalMetric,
    ScalarField,
    get_grid,
    grad_norm_squared,
    laplace_round,
    random_field,
)
from horizonlab.services.stability import (
    certificate_from_eigenpair,
    eigenvalue_certificate,
    first_eigenpair,
    gradient_bound_test,
    is_in_M_plus,
    membership_tolerance,
    q_operator,
    quadratic_form,
    quadratic_form_intrinsic,
)


@pytest.fixture(scope="module")
def cos_pair(cos_w):
    return first_eigenpair(ConformalMetric(cos_w))


# ------------------------------------------------------------------------------#
# eigenvalues
# ------------------------------------------------------------------------------#


def test_round_sphere_eigenvalue(round_w):
    """lambda_1(-Delta + K) = 1 on the round sphere of area 4 pi"""
    pair = first_eigenpair(ConformalMetric(round_w))
    assert abs(pair.lambda_ - 1.0) <= 1e-8, f"lambda_1 = {pair.lambda_}"
    assert pair.backend == "galerkin-zonal"
    assert np.allclose(pair.u.values, pair.u.values[0, 0]), "ground state of the round sphere is constant"


def test_round_sphere_full_grid(full_grid):
    """The non-zonal solve agrees with the zonal one"""
    pair = first_eigenpair(ConformalMetric(ScalarField.constant(full_grid, 0.0)))
    assert abs(pair.lambda_ - 1.0) <= 1e-8, f"lambda_1 = {pair.lambda_}"
    assert pair.size == 13 * 13, f"basis size {pair.size}"


@pytest.mark.parametrize("c", [-1.0, 0.5, 2.0])
def test_eigenvalue_scaling_law(cos_w, cos_pair, c):
    """lambda_1(exp(2c) g) = exp(-2c) lambda_1(g)"""
    scaled = first_eigenpair(ConformalMetric(cos_w + c))
    expected = math.exp(-2.0 * c) * cos_pair.lambda_
    assert abs(scaled.lambda_ - expected) <= 1e-9 * max(1.0, expected), f"c={c}: {scaled.lambda_} vs {expected}"


def test_cos_metric_eigenpair(cos_pair):
    """w = cos(theta)/2 is in M+ with a positive ground state and small residual"""
    assert cos_pair.lambda_ > 0, f"lambda_1 = {cos_pair.lambda_}"
    assert np.min(cos_pair.u.values) > 0, "ground state must be positive"
    assert cos_pair.gap > 0, f"gap {cos_pair.gap}"
    assert cos_pair.residual < 1e-6, f"eigen residual {cos_pair.residual:.3e}"


def test_eigenvalue_matches_quadratic_form(cos_w, cos_pair):
    """Rayleigh quotient of the ground state reproduces lambda_1"""
    g = ConformalMetric(cos_w)
    fine = cos_w.grid.oversampled()
    norm = fine.integrate(cos_pair.u.on(fine).values ** 2 * g.area_density(fine))
    quotient = quadratic_form(g, cos_pair.u) / norm
    assert abs(quotient - cos_pair.lambda_) <= 1e-8, f"Rayleigh quotient {quotient} vs {cos_pair.lambda_}"


def test_dense_bandlimit_guard(monkeypatch, full_grid):
    """Non-zonal solves above the dense limit are refused"""
    monkeypatch.setattr(settings, "max_dense_bandlimit", 8)
    w = random_field(full_grid, np.random.default_rng(3))
    with pytest.raises(InputError):
        first_eigenpair(ConformalMetric(w))


# ------------------------------------------------------------------------------#
# quadratic forms
# ------------------------------------------------------------------------------#


def test_conformal_invariance_of_quadratic_form(full_grid, rng):
    """The round-metric and intrinsic expressions agree"""
    for _ in range(3):
        g = ConformalMetric(random_field(full_grid, rng, degree=4, max_gradient=0.8))
        f = random_field(full_grid, rng, degree=4)
        a, b = quadratic_form(g, f), quadratic_form_intrinsic(g, f)
        assert abs(a - b) <= 1e-8 * max(1.0, abs(a)), f"{a} vs {b}"


def test_quadratic_form_bounded_by_lambda(full_grid):
    """Q(f) >= lambda_1 int f^2 dA_g for random band-limited f"""
    rng = np.random.default_rng(77)
    g = ConformalMetric(random_field(full_grid, rng, max_gradient=0.8))
    lam = first_eigenpair(g).lambda_
    fine = full_grid.oversampled()
    density = g.area_density(fine)
    for k in range(50):
        f = random_field(full_grid, rng)
        mass = fine.integrate(f.on(fine).values ** 2 * density)
        slack = quadratic_form(g, f) - lam * mass
        assert slack >= -1e-9 * max(1.0, mass), f"sample {k}: Q(f) - lambda |f|^2 = {slack:.3e}"


def test_quadratic_form_rejects_zero(round_w):
    """The zero field has no Rayleigh quotient"""
    with pytest.raises(InputError):
        quadratic_form(ConformalMetric(round_w), round_w)


def test_q_operator_at_zero(cos_w):
    """Q_w 0 = 1 - |grad w|^2"""
    zero = ScalarField.constant(cos_w.grid, 0.0)
    q = q_operator(cos_w, zero)
    expected = 1.0 - grad_norm_squared(cos_w)
    np.testing.assert_allclose(q.values, expected, atol=1e-12, err_msg="Q_w 0")


def test_q_operator_at_w(cos_w):
    """Q_w w = 1 - Delta* w"""
    q = q_operator(cos_w, cos_w)
    np.testing.assert_allclose(q.values, 1.0 - laplace_round(cos_w).values, atol=1e-12)
    np.testing.assert_allclose(q.values, 1.0 + np.cos(cos_w.grid.theta)[:, None], atol=1e-12)


# ------------------------------------------------------------------------------#
# membership
# ------------------------------------------------------------------------------#


def test_membership_and_certificates(cos_w, cos_pair):
    """All three routes certify w = cos(theta)/2"""
    g = ConformalMetric(cos_w)
    assert is_in_M_plus(g)

    eig = eigenvalue_certificate(g, cos_pair)
    assert eig.kind == CertificateKind.EIGENVALUE and eig.verify(membership_tolerance(g))

    grad = gradient_bound_test(cos_w)
    assert grad is not None, "sup |grad w| = 1/2 < 1 must certify"
    assert abs(grad.sup_grad_w - 0.5) <= 1e-6, f"sup |grad w| = {grad.sup_grad_w}"

    q = certificate_from_eigenpair(g, cos_pair)
    assert q.min_q > 0, f"min Q = {q.min_q}"
    bound = cos_pair.lambda_ * math.exp(-1.0)
    assert abs(q.min_q - bound) <= 0.02 * bound, f"min Q {q.min_q} vs lambda min exp(2w) {bound}"
    assert q.to_record().kind == CertificateKind.Q_CERTIFICATE


def test_certificate_min_q_matches_phi(full_grid):
    """Reported min Q is the minimum of Q_w phi for the carried phi"""
    rng = np.random.default_rng(2024)
    certified = 0
    for k in range(20):
        g = ConformalMetric(random_field(full_grid, rng, max_gradient=1.5))
        pair = first_eigenpair(g)
        if pair.lambda_ <= membership_tolerance(g):
            continue
        cert = certificate_from_eigenpair(g, pair)
        recomputed = cert.recompute_min_q()
        assert abs(cert.min_q - recomputed) <= 1e-12 * max(1.0, abs(recomputed)), f"metric {k}: {cert.min_q} vs {recomputed}"
        assert cert.verify() == (recomputed > 0.0)
        certified += cert.verify()
    assert certified > 0


def test_verify_recomputes_from_phi(cos_w, cos_pair):
    """A tampered min Q does not survive verification when phi is carried"""
    cert = certificate_from_eigenpair(ConformalMetric(cos_w), cos_pair)
    assert cert.verify()
    cert.phi = ScalarField.from_function(cos_w.grid, lambda theta, phi: 3.0 * np.cos(theta))
    assert cert.min_q > 0 and not cert.verify()


def test_gradient_bound_inconclusive():
    """Steep conformal factors fall through the gradient test"""
    grid = get_grid(12, zonal=True)
    w = ScalarField.from_function(grid, lambda theta, phi: 2.0 * np.cos(theta))
    assert gradient_bound_test(w) is None


def test_membership_tolerance_must_be_positive(round_w):
    """A non-positive tolerance is an input error"""
    with pytest.raises(InputError):
        is_in_M_plus(ConformalMetric(round_w), tol=0.0)


def test_certificate_refused_outside_m_plus(round_w):
    """A certificate is refused when lambda does not exceed the tolerance"""
    g = ConformalMetric(round_w)
    pair = first_eigenpair(g)
    pair.lambda_ = 0.0
    with pytest.raises(MembershipError):
        certificate_from_eigenpair(g, pair)
