"""Pseudo-spectral discretization of the round sphere and conformal metric geometry"""

import math
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import roots_legendre

from horizonlab.core.config import settings
from horizonlab.core.errors import InputError
from horizonlab.services.legendre import normalized_legendre
from horizonlab.utils.logger import setup_logger

logger = setup_logger(__name__)


class SphereGrid:
    """
    Gauss-Legendre colatitudes times uniform longitudes on the round sphere of area 4*pi.

    Spectral coefficients are stored as a complex array ``c[l, m]`` for
    ``0 <= m <= min(l, mmax)`` with

        f = sum_l c[l, 0] P_l0 + 2 Re sum_{m > 0} c[l, m] P_lm exp(i m phi)

    where ``P_lm`` are the orthonormal associated Legendre functions. A zonal
    grid keeps a single longitude and only the ``m = 0`` column.
    """

    def __init__(self, bandlimit: int, zonal: bool = False):
        if bandlimit < 1:
            raise InputError("bandlimit must be a positive integer", {"bandlimit": bandlimit})

        self.bandlimit = int(bandlimit)
        self.zonal = zonal
        self.mmax = 0 if zonal else self.bandlimit
        self.nlat = self.bandlimit + 1
        self.nlon = 1 if zonal else 2 * self.bandlimit + 2

        nodes, wlat = roots_legendre(self.nlat)
        order = np.argsort(-nodes)
        self.cos_theta = nodes[order]
        self.lat_weights = wlat[order]
        self.theta = np.arccos(self.cos_theta)
        self.sin_theta = np.sin(self.theta)
        self.phi = 2.0 * math.pi * np.arange(self.nlon) / self.nlon

        self.weights = np.outer(self.lat_weights, np.full(self.nlon, 2.0 * math.pi / self.nlon))
        self.P, self.dP = normalized_legendre(self.bandlimit, self.mmax, self.theta)
        self.degrees = np.arange(self.bandlimit + 1)
        self.orders = np.arange(self.mmax + 1)

        self._mask = self.degrees[:, None] >= self.orders[None, :]

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nlat, self.nlon)

    @property
    def size(self) -> int:
        return self.nlat * self.nlon

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Colatitude and longitude arrays broadcast to the grid shape"""
        return np.meshgrid(self.theta, self.phi, indexing="ij")

    def unit_vectors(self) -> np.ndarray:
        """Node positions in R^3, shape (nlat, nlon, 3)"""
        theta, phi = self.mesh()
        return spherical_to_cartesian(theta, phi)

    def oversampled(self) -> "SphereGrid":
        return get_grid(2 * self.bandlimit, self.zonal)

    # ------------------------------------------------------------------
    # transforms
    # ------------------------------------------------------------------

    def analyze(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != self.shape:
            raise InputError("field shape does not match grid", {"expected": self.shape, "got": values.shape})
        if not np.all(np.isfinite(values)):
            raise InputError("field contains non-finite values")

        F = np.fft.rfft(values, axis=1)[:, : self.mmax + 1]
        F = F * (self.lat_weights[:, None] * (2.0 * math.pi / self.nlon))
        coeffs = np.einsum("mli,im->lm", self.P, F)
        return np.where(self._mask, coeffs, 0.0)

    def _to_nodes(self, G: np.ndarray) -> np.ndarray:
        if self.zonal:
            return G[:, :1].real.copy()
        X = np.zeros((self.nlat, self.nlon // 2 + 1), dtype=complex)
        X[:, : self.mmax + 1] = G * self.nlon
        return np.fft.irfft(X, n=self.nlon, axis=1)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = self.fit_coeffs(coeffs)
        G = np.einsum("lm,mli->im", coeffs, self.P)
        return self._to_nodes(G)

    def synthesize_gradient(self, coeffs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Orthonormal-frame components (d/dtheta, (sin theta)^-1 d/dphi)"""
        coeffs = self.fit_coeffs(coeffs)
        G_theta = np.einsum("lm,mli->im", coeffs, self.dP)
        G = np.einsum("lm,mli->im", coeffs, self.P)
        G_phi = G * (1j * self.orders[None, :]) / self.sin_theta[:, None]
        return self._to_nodes(G_theta), self._to_nodes(G_phi)

    def divergence_coeffs(self, x_theta: np.ndarray, x_phi: np.ndarray) -> np.ndarray:
        """Coefficients of div X from the weak form  int f div X = -int grad f . X"""
        scale = self.lat_weights[:, None] * (2.0 * math.pi / self.nlon)
        F_theta = np.fft.rfft(x_theta, axis=1)[:, : self.mmax + 1] * scale
        F_phi = np.fft.rfft(x_phi, axis=1)[:, : self.mmax + 1] * scale
        F_phi = F_phi * (1j * self.orders[None, :]) / self.sin_theta[:, None]
        coeffs = -(np.einsum("mli,im->lm", self.dP, F_theta) - np.einsum("mli,im->lm", self.P, F_phi))
        return np.where(self._mask, coeffs, 0.0)

    def fit_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Zero-pad or truncate a coefficient array to this grid's bandlimit"""
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape == (self.bandlimit + 1, self.mmax + 1):
            return coeffs
        out = np.zeros((self.bandlimit + 1, self.mmax + 1), dtype=complex)
        nl = min(coeffs.shape[0], self.bandlimit + 1)
        nm = min(coeffs.shape[1], self.mmax + 1)
        out[:nl, :nm] = coeffs[:nl, :nm]
        return np.where(self._mask, out, 0.0)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(self.weights * values))

    # ------------------------------------------------------------------
    # evaluation at arbitrary points
    # ------------------------------------------------------------------

    def point_basis(self, points: np.ndarray) -> "PointBasis":
        return PointBasis(self, points)

    def evaluate(
        self,
        coeffs: np.ndarray,
        points: np.ndarray,
        gradient: bool = False,
    ):
        """
        Evaluate a band-limited field at unit vectors ``points`` (shape (..., 3)).

        With ``gradient=True`` also returns the round gradient as ambient
        3-vectors, shape (..., 3).
        """
        basis = PointBasis(self, points)
        if not gradient:
            return basis.values(coeffs)
        return basis.values(coeffs), basis.gradient(coeffs)


class PointBasis:
    """Legendre tables and phases at arbitrary points, reusable across fields"""

    def __init__(self, grid: SphereGrid, points: np.ndarray):
        pts = np.asarray(points, dtype=float)
        self.grid = grid
        self.shape = pts.shape[:-1]
        theta, phi = cartesian_to_spherical(pts.reshape(-1, 3))
        self.P, self.dP = normalized_legendre(grid.bandlimit, grid.mmax, theta)
        self.weight = np.where(grid.orders == 0, 1.0, 2.0)
        self.phase = np.exp(1j * np.outer(phi, grid.orders))
        self.inv_sin = 1.0 / np.maximum(np.sin(theta), 1e-12)
        self.e_theta, self.e_phi = frame_vectors(theta, phi)

    def _sum(self, G: np.ndarray) -> np.ndarray:
        return np.sum(self.weight[None, :] * (G * self.phase).real, axis=1)

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = self.grid.fit_coeffs(coeffs)
        return self._sum(np.einsum("lm,mlp->pm", coeffs, self.P)).reshape(self.shape)

    def gradient(self, coeffs: np.ndarray) -> np.ndarray:
        """Round gradient as ambient 3-vectors"""
        coeffs = self.grid.fit_coeffs(coeffs)
        f_theta = self._sum(np.einsum("lm,mlp->pm", coeffs, self.dP))
        G = np.einsum("lm,mlp->pm", coeffs, self.P)
        f_phi = self._sum(G * 1j * self.grid.orders[None, :]) * self.inv_sin
        grad = f_theta[:, None] * self.e_theta + f_phi[:, None] * self.e_phi
        return grad.reshape(self.shape + (3,))


@lru_cache(maxsize=16)
def get_grid(bandlimit: int = None, zonal: bool = False) -> SphereGrid:
    bandlimit = bandlimit or settings.bandlimit
    logger.debug(f"Building sphere grid L={bandlimit} zonal={zonal}")
    return SphereGrid(bandlimit, zonal)


def spherical_to_cartesian(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    s = np.sin(theta)
    return np.stack([s * np.cos(phi), s * np.sin(phi), np.cos(theta)], axis=-1)


def cartesian_to_spherical(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    z = np.clip(points[..., 2] / np.linalg.norm(points, axis=-1), -1.0, 1.0)
    theta = np.arccos(z)
    phi = np.mod(np.arctan2(points[..., 1], points[..., 0]), 2.0 * math.pi)
    return theta, phi


def frame_vectors(theta: np.ndarray, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ambient unit vectors e_theta, e_phi"""
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_phi = np.stack([-sp, cp, np.zeros_like(phi)], axis=-1)
    return e_theta, e_phi


class ScalarField:
    """Real values at the nodes of a SphereGrid"""

    def __init__(self, grid: SphereGrid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            values = np.broadcast_to(values, grid.shape).copy()
        if not np.all(np.isfinite(values)):
            raise InputError("scalar field contains non-finite values")
        self.grid = grid
        self.values = values
        self._coeffs: Optional[np.ndarray] = None

    @classmethod
    def from_function(cls, grid: SphereGrid, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ScalarField":
        theta, phi = grid.mesh()
        return cls(grid, fn(theta, phi))

    @classmethod
    def from_coeffs(cls, grid: SphereGrid, coeffs: np.ndarray) -> "ScalarField":
        field = cls(grid, grid.synthesize(coeffs))
        field._coeffs = grid.fit_coeffs(coeffs)
        return field

    @classmethod
    def constant(cls, grid: SphereGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = self.grid.analyze(self.values)
        return self._coeffs

    def on(self, grid: SphereGrid) -> "ScalarField":
        """Spectral resampling onto another grid"""
        if grid is self.grid:
            return self
        return ScalarField.from_coeffs(grid, self.coeffs)

    def is_zonal(self, tol: float = 1e-12) -> bool:
        if self.grid.zonal:
            return True
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        return bool(np.max(np.abs(self.coeffs[:, 1:])) <= tol * scale)

    def min(self) -> float:
        return float(np.min(self.values))

    def max(self) -> float:
        return float(np.max(self.values))

    def __add__(self, other):
        other_values = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values + other_values)

    def __sub__(self, other):
        other_values = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values - other_values)

    def __mul__(self, other):
        other_values = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values * other_values)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


class TangentField:
    """Tangent vector field in the orthonormal frame (d/dtheta, (sin theta)^-1 d/dphi)"""

    def __init__(self, grid: SphereGrid, theta_comp: np.ndarray, phi_comp: np.ndarray):
        self.grid = grid
        self.theta_comp = np.asarray(theta_comp, dtype=float)
        self.phi_comp = np.asarray(phi_comp, dtype=float)
        if not (np.all(np.isfinite(self.theta_comp)) and np.all(np.isfinite(self.phi_comp))):
            raise InputError("tangent field contains non-finite values")

    def norm(self) -> np.ndarray:
        return np.hypot(self.theta_comp, self.phi_comp)

    def dot(self, other: "TangentField") -> np.ndarray:
        return self.theta_comp * other.theta_comp + self.phi_comp * other.phi_comp

    def scaled(self, factor) -> "TangentField":
        factor = factor.values if isinstance(factor, ScalarField) else factor
        return TangentField(self.grid, self.theta_comp * factor, self.phi_comp * factor)

    def ambient(self) -> np.ndarray:
        """Components as 3-vectors at the nodes, shape (nlat, nlon, 3)"""
        theta, phi = self.grid.mesh()
        e_theta, e_phi = frame_vectors(theta, phi)
        return self.theta_comp[..., None] * e_theta + self.phi_comp[..., None] * e_phi


class ConformalMetric:
    """The metric exp(2w) g* on the sphere, g* round of area 4*pi"""

    def __init__(self, w: ScalarField):
        self.w = w
        self.grid = w.grid

    @classmethod
    def round(cls, grid: SphereGrid, log_scale: float = 0.0) -> "ConformalMetric":
        return cls(ScalarField.constant(grid, log_scale))

    def area_density(self, grid: Optional[SphereGrid] = None) -> np.ndarray:
        """exp(2w) sampled on ``grid`` (oversampled by default)"""
        grid = grid or self.grid.oversampled()
        return np.exp(2.0 * self.w.on(grid).values)

    def curvature_density(self, grid: Optional[SphereGrid] = None) -> ScalarField:
        """K_g dA_g / dA* = 1 - laplacian(w)"""
        grid = grid or self.grid
        return laplace_round(self.w).on(grid) * -1.0 + 1.0


# ----------------------------------------------------------------------
# transforms and round-metric operators
# ----------------------------------------------------------------------


def sh_analyze(f: ScalarField) -> np.ndarray:
    return f.coeffs


def sh_synthesize(grid: SphereGrid, coeffs: np.ndarray) -> ScalarField:
    return ScalarField.from_coeffs(grid, coeffs)


def laplace_round(f: ScalarField) -> ScalarField:
    ell = f.grid.degrees
    return ScalarField.from_coeffs(f.grid, f.coeffs * (-ell * (ell + 1.0))[:, None])


def inverse_laplace_round(f: ScalarField) -> ScalarField:
    """Mean-zero solution of laplacian(psi) = f; the mean of f is discarded"""
    ell = f.grid.degrees.astype(float)
    inv = np.zeros_like(ell)
    inv[1:] = -1.0 / (ell[1:] * (ell[1:] + 1.0))
    return ScalarField.from_coeffs(f.grid, f.coeffs * inv[:, None])


def grad_round(f: ScalarField) -> TangentField:
    x_theta, x_phi = f.grid.synthesize_gradient(f.coeffs)
    return TangentField(f.grid, x_theta, x_phi)


def div_round(X: TangentField) -> ScalarField:
    return ScalarField.from_coeffs(X.grid, X.grid.divergence_coeffs(X.theta_comp, X.phi_comp))


def grad_norm_squared(f: ScalarField, grid: Optional[SphereGrid] = None) -> np.ndarray:
    """|grad f|^2 sampled on ``grid`` (the field's own grid by default)"""
    grid = grid or f.grid
    return grad_round(f.on(grid)).norm() ** 2


# ----------------------------------------------------------------------
# conformal metric geometry
# ----------------------------------------------------------------------


def gauss_curvature(g: ConformalMetric, grid: Optional[SphereGrid] = None) -> ScalarField:
    """K_g = exp(-2w) (1 - laplacian w) at the nodes of ``grid`` (the metric's own by default)"""
    grid = grid or g.grid
    density = g.curvature_density(grid)
    return ScalarField(grid, np.exp(-2.0 * g.w.on(grid).values) * density.values)


def integrate(g: ConformalMetric, f: ScalarField) -> float:
    """Integral of f against dA_g, products formed on the oversampled grid"""
    fine = g.grid.oversampled()
    return fine.integrate(f.on(fine).values * g.area_density(fine))


def area(g: ConformalMetric) -> float:
    fine = g.grid.oversampled()
    return fine.integrate(g.area_density(fine))


def total_curvature(g: ConformalMetric) -> float:
    """Integral of K_g dA_g, with K_g and exp(2w) both sampled on the oversampled grid"""
    fine = g.grid.oversampled()
    return fine.integrate(gauss_curvature(g, fine).values * g.area_density(fine))


def negative_curvature_integral(g: ConformalMetric) -> float:
    """Integral of (K_g)_- dA_g with (K)_- = max(0, -K)"""
    fine = g.grid.oversampled()
    density = g.curvature_density(fine).values
    return fine.integrate(np.maximum(0.0, -density))


def random_field(
    grid: SphereGrid,
    rng: np.random.Generator,
    degree: Optional[int] = None,
    max_gradient: float = 0.5,
) -> ScalarField:
    """Random band-limited field scaled so that sup |grad w| equals ``max_gradient``"""
    degree = min(degree or 6, grid.bandlimit)
    coeffs = np.zeros((grid.bandlimit + 1, grid.mmax + 1), dtype=complex)
    for l in range(1, degree + 1):
        for m in range(0, min(l, grid.mmax) + 1):
            real = rng.standard_normal()
            imag = 0.0 if m == 0 else rng.standard_normal()
            coeffs[l, m] = (real + 1j * imag) / (1.0 + l) ** 2
    coeffs[0, 0] = rng.standard_normal()
    field = ScalarField.from_coeffs(grid, coeffs)
    sup_grad = float(np.sqrt(np.max(grad_norm_squared(field, grid.oversampled()))))
    if sup_grad > 0:
        field = ScalarField.from_coeffs(grid, coeffs * (max_gradient / sup_grad))
    return field
