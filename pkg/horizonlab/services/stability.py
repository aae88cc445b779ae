"""Stability operator -Delta_g + K_g on conformal metrics: eigenpairs and M+ certificates"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.linalg import eigh

from horizonlab.core.config import settings
from horizonlab.core.constants import FOUR_PI, MESSAGES
from horizonlab.core.errors import InputError, MembershipError, NumericalError
from horizonlab.models.responses import CertificateKind, EigenSummary, MembershipCertificateRecord
from horizonlab.services.sphere_field import (
    ConformalMetric,
    ScalarField,
    SphereGrid,
    area,
    get_grid,
    grad_norm_squared,
    laplace_round,
)
from horizonlab.utils.logger import log_eigen_metrics, log_execution_time, setup_logger

logger = setup_logger(__name__)


@dataclass
class EigenPair:
    """First eigenvalue and positive, L2(dA_g)-normalized eigenfunction"""

    lambda_: float
    u: ScalarField
    gap: float
    residual: float
    coeffs: np.ndarray = field(repr=False)
    backend: str = "galerkin"
    size: int = 0

    def to_summary(self) -> EigenSummary:
        return EigenSummary(backend=self.backend, size=self.size, lambda_=self.lambda_, gap=self.gap, residual=self.residual)


@dataclass
class MembershipCertificate:
    """Evidence that a metric lies in M+, re-checkable from its payload"""

    kind: CertificateKind
    lambda_: Optional[float] = None
    phi: Optional[ScalarField] = field(default=None, repr=False)
    w: Optional[ScalarField] = field(default=None, repr=False)
    min_q: Optional[float] = None
    sup_grad_w: Optional[float] = None

    def recompute_min_q(self) -> float:
        """min Q_w phi on the oversampled grid of w"""
        if self.phi is None or self.w is None:
            raise InputError("certificate carries no phi to re-evaluate", {"kind": self.kind.value})
        return float(q_operator(self.w, self.phi, self.w.grid.oversampled()).values.min())

    def verify(self, tol: float = 0.0) -> bool:
        if self.kind == CertificateKind.EIGENVALUE:
            return self.lambda_ is not None and self.lambda_ > tol
        if self.kind == CertificateKind.Q_CERTIFICATE:
            if self.phi is not None and self.w is not None:
                return self.recompute_min_q() > 0.0
            return self.min_q is not None and self.min_q > 0.0
        return self.sup_grad_w is not None and self.sup_grad_w < 1.0

    def to_record(self) -> MembershipCertificateRecord:
        return MembershipCertificateRecord(
            kind=self.kind,
            lambda_=self.lambda_,
            min_Q=self.min_q,
            sup_grad_w=self.sup_grad_w,
        )


# ----------------------------------------------------------------------
# Galerkin assembly in the real harmonic basis
# ----------------------------------------------------------------------


def _basis_index(grid: SphereGrid, zonal: bool):
    """(l, m, kind) triples; kind 0 = cos/zonal, 1 = sin"""
    index = []
    for l in range(grid.bandlimit + 1):
        index.append((l, 0, 0))
        if zonal:
            continue
        for m in range(1, l + 1):
            index.append((l, m, 0))
            index.append((l, m, 1))
    return index


def _basis_on(quad: SphereGrid, index) -> np.ndarray:
    """Real orthonormal harmonics sampled on ``quad``, shape (nodes, nbasis)"""
    cos_mphi = np.cos(np.outer(quad.orders, quad.phi))
    sin_mphi = np.sin(np.outer(quad.orders, quad.phi))
    columns = []
    for l, m, kind in index:
        if m == 0:
            values = np.outer(quad.P[0, l], np.ones(quad.nlon))
        else:
            trig = sin_mphi[m] if kind else cos_mphi[m]
            values = math.sqrt(2.0) * np.outer(quad.P[m, l], trig)
        columns.append(values.ravel())
    return np.stack(columns, axis=1)


def _real_to_complex(grid: SphereGrid, index, vector: np.ndarray) -> np.ndarray:
    coeffs = np.zeros((grid.bandlimit + 1, grid.mmax + 1), dtype=complex)
    for (l, m, kind), a in zip(index, vector):
        if m == 0:
            coeffs[l, 0] += a
        elif kind == 0:
            coeffs[l, m] += a / math.sqrt(2.0)
        else:
            coeffs[l, m] -= 1j * a / math.sqrt(2.0)
    return coeffs


@lru_cache(maxsize=8)
def _galerkin_basis(bandlimit: int, zonal: bool):
    index = _basis_index(get_grid(bandlimit), zonal)
    return index, _basis_on(get_grid(2 * bandlimit, zonal), index)


def _use_zonal(g: ConformalMetric) -> bool:
    return g.grid.zonal or g.w.is_zonal()


def _eigen_residual(g: ConformalMetric, u: ScalarField, lam: float) -> float:
    lap_u = laplace_round(u).values
    density = g.curvature_density().values
    lu = np.exp(-2.0 * g.w.values) * (-lap_u + density * u.values)
    return float(np.max(np.abs(lu - lam * u.values)))


@log_execution_time(logger)
def first_eigenpair(g: ConformalMetric) -> EigenPair:
    """
    Smallest eigenpair of (-Delta* + (1 - Delta* w)) u = lambda exp(2w) u.

    Dense Galerkin in the real harmonic basis up to the grid bandlimit with
    products integrated on the oversampled grid. Axisymmetric metrics use
    the m = 0 sector, which contains the ground state.
    """
    grid = g.grid
    zonal = _use_zonal(g)
    if not zonal and grid.bandlimit > settings.max_dense_bandlimit:
        raise InputError(
            "bandlimit too large for the dense eigen solve",
            {"bandlimit": grid.bandlimit, "max_dense_bandlimit": settings.max_dense_bandlimit},
        )

    index, Phi = _galerkin_basis(grid.bandlimit, zonal)
    quad = get_grid(2 * grid.bandlimit, zonal)
    wq = quad.weights.ravel()

    potential = g.curvature_density(quad).values.ravel()
    density = g.area_density(quad).ravel()
    degrees = np.array([l for l, _, _ in index], dtype=float)

    A = np.diag(degrees * (degrees + 1.0)) + Phi.T @ ((wq * potential)[:, None] * Phi)
    B = Phi.T @ ((wq * density)[:, None] * Phi)
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)

    n = A.shape[0]
    try:
        values, vectors = eigh(A, B, subset_by_index=[0, min(1, n - 1)])
    except np.linalg.LinAlgError as e:
        logger.error(f"Generalized eigen solve failed: {str(e)}")
        raise NumericalError("eigen solver did not converge", {"size": n, "reason": str(e)})

    lam = float(values[0])
    gap = float(values[1] - values[0]) if n > 1 else math.inf
    if gap < settings.eigen_gap_floor:
        raise NumericalError("first eigenvalue is numerically degenerate", {"lambda": lam, "gap": gap})

    coeffs = _real_to_complex(grid, index, vectors[:, 0])
    u = ScalarField.from_coeffs(grid, coeffs)
    if np.sum(grid.weights * u.values) < 0:
        coeffs = -coeffs
        u = ScalarField.from_coeffs(grid, coeffs)

    residual = _eigen_residual(g, u, lam)
    backend = "galerkin-zonal" if zonal else "galerkin"
    log_eigen_metrics(logger, backend, n, lam, gap, residual)
    return EigenPair(lambda_=lam, u=u, gap=gap, residual=residual, coeffs=coeffs, backend=backend, size=n)


def membership_tolerance(g: ConformalMetric) -> float:
    return settings.membership_tol * FOUR_PI / area(g)


def is_in_M_plus(g: ConformalMetric, tol: Optional[float] = None) -> bool:
    tol = membership_tolerance(g) if tol is None else tol
    if tol <= 0:
        raise InputError("membership tolerance must be positive", {"tol": tol})
    return first_eigenpair(g).lambda_ > tol


# ----------------------------------------------------------------------
# quadratic form and the Q operator
# ----------------------------------------------------------------------


def quadratic_form(g: ConformalMetric, f: ScalarField) -> float:
    """int |grad* f|^2 + (1 - Delta* w) f^2 dA*"""
    if np.max(np.abs(f.values)) == 0.0:
        raise InputError("quadratic form needs a nonzero field")
    grid = f.grid
    ell = grid.degrees[:, None].astype(float)
    parseval = np.where(grid.orders[None, :] == 0, 1.0, 2.0)
    dirichlet = float(np.sum(ell * (ell + 1.0) * parseval * np.abs(f.coeffs) ** 2))

    quad = grid.oversampled()
    potential = g.curvature_density(quad).values
    return dirichlet + quad.integrate(potential * f.on(quad).values ** 2)


def quadratic_form_intrinsic(g: ConformalMetric, f: ScalarField) -> float:
    """int |grad^g f|_g^2 + K_g f^2 dA_g, evaluated with the metric factors kept explicit"""
    quad = g.grid.oversampled()
    e2w = g.area_density(quad)
    grad_g_sq = grad_norm_squared(f, quad) / e2w
    K = g.curvature_density(quad).values / e2w
    return quad.integrate((grad_g_sq + K * f.on(quad).values ** 2) * e2w)


def q_operator(w: ScalarField, phi: ScalarField, grid: Optional[SphereGrid] = None) -> ScalarField:
    """Q_w phi = -Delta* phi - |grad*(phi - w)|^2 + 1"""
    grid = grid or w.grid
    lap_phi = laplace_round(phi).on(grid).values
    diff = ScalarField.from_coeffs(w.grid, phi.on(w.grid).coeffs - w.coeffs)
    return ScalarField(grid, -lap_phi - grad_norm_squared(diff, grid) + 1.0)


def certificate_from_eigenpair(g: ConformalMetric, pair: Optional[EigenPair] = None) -> MembershipCertificate:
    """
    phi = log u + w; then Q_w phi = (-Delta* u + (1 - Delta* w) u) / u = lambda exp(2w).
    phi is band-limited to the metric's grid, so min Q is evaluated from
    phi itself on the oversampled grid, the same way verify re-checks it.
    """
    pair = pair or first_eigenpair(g)
    tol = membership_tolerance(g)
    if pair.lambda_ <= tol:
        logger.error(f"Certificate requested for metric outside M+: lambda={pair.lambda_}")
        raise MembershipError(MESSAGES["not_in_m_plus"], {"lambda": pair.lambda_, "tol": tol})

    quad = g.grid.oversampled()
    u_fine = pair.u.on(quad).values
    if np.min(u_fine) <= 0:
        raise NumericalError("eigenfunction is not positive", {"min_u": float(np.min(u_fine))})

    phi = ScalarField(g.grid, np.log(pair.u.values) + g.w.values)
    return MembershipCertificate(
        kind=CertificateKind.Q_CERTIFICATE,
        lambda_=pair.lambda_,
        phi=phi,
        w=g.w,
        min_q=float(q_operator(g.w, phi, quad).values.min()),
    )


def gradient_bound_test(w: ScalarField) -> Optional[MembershipCertificate]:
    """Certificate when sup |grad* w| < 1 over the oversampled nodes"""
    sup_grad = float(np.sqrt(np.max(grad_norm_squared(w, w.grid.oversampled()))))
    if sup_grad < 1.0:
        return MembershipCertificate(kind=CertificateKind.GRADIENT_BOUND, sup_grad_w=sup_grad)
    logger.info(f"Gradient bound inconclusive: sup |grad w| = {sup_grad:.6f}")
    return None


def eigenvalue_certificate(g: ConformalMetric, pair: Optional[EigenPair] = None) -> MembershipCertificate:
    pair = pair or first_eigenpair(g)
    return MembershipCertificate(kind=CertificateKind.EIGENVALUE, lambda_=pair.lambda_)
