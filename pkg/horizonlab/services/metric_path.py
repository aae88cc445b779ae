"""
Area-preserving path t -> g(t) in M+ from exp(2w) g* to a round metric.

h(t) = exp(2 zeta(t) w + 2 a(t)) g* is pulled back by the flow of
X_t = grad^{h(t)} psi(t), where Delta_{h(t)} psi = -2 (zeta' w + a'), so that
g(t) = phi_t^* h(t) has a time-independent area form.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.special import roots_legendre

from horizonlab.core.config import settings
from horizonlab.core.constants import FOUR_PI, MESSAGES
from horizonlab.core.errors import InputError, MembershipError, NumericalError
from horizonlab.models.responses import PathSummary
from horizonlab.services.sphere_field import (
    ConformalMetric,
    ScalarField,
    SphereGrid,
    area,
    cartesian_to_spherical,
    frame_vectors,
    inverse_laplace_round,
    laplace_round,
)
from horizonlab.services.stability import EigenPair, first_eigenpair, membership_tolerance
from horizonlab.utils.logger import log_execution_time, log_path_metrics, setup_logger

logger = setup_logger(__name__)

VelocityField = Callable[[float, np.ndarray], np.ndarray]

_GL_NODES, _GL_WEIGHTS = roots_legendre(64)


def _bump(x: np.ndarray) -> np.ndarray:
    inside = (x > 0) & (x < 1)
    xi = np.where(inside, x, 0.5)
    return np.where(inside, np.exp(-1.0 / (xi * (1.0 - xi))), 0.0)


def _bump_slope(x: np.ndarray) -> np.ndarray:
    inside = (x > 0) & (x < 1)
    xi = np.where(inside, x, 0.5)
    return np.where(inside, _bump(xi) * (1.0 - 2.0 * xi) / (xi * (1.0 - xi)) ** 2, 0.0)


_BUMP_TOTAL = quad(lambda x: math.exp(-1.0 / (x * (1.0 - x))), 0.0, 1.0, epsabs=1e-15)[0]


@dataclass(frozen=True)
class PathProfile:
    """
    zeta(t) = 1 - (normalized integral of a bump supported in (0, 1/2)).

    The bump exp(-1/(x(1-x))), x = 2t, vanishes to all orders at t = 0, so
    any requested flatness order is met.
    """

    flatness_order: int = 1

    def _partial(self, t: np.ndarray) -> np.ndarray:
        y = np.clip(2.0 * np.asarray(t, dtype=float), 0.0, 1.0)
        half = 0.5 * y
        x = half[..., None] * (_GL_NODES + 1.0)
        return np.sum(half[..., None] * _GL_WEIGHTS * _bump(x), axis=-1)

    def zeta(self, t) -> np.ndarray:
        return 1.0 - self._partial(t) / _BUMP_TOTAL

    def dzeta(self, t) -> np.ndarray:
        return -2.0 * _bump(2.0 * np.asarray(t, dtype=float)) / _BUMP_TOTAL

    def ddzeta(self, t) -> np.ndarray:
        return -4.0 * _bump_slope(2.0 * np.asarray(t, dtype=float)) / _BUMP_TOTAL

    def flatness_residual(self, step: float = 1e-4) -> float:
        """max |zeta^(j)(0)| over 1 <= j <= flatness_order, from forward differences of zeta'"""
        samples = np.asarray(self.dzeta(step * np.arange(self.flatness_order)), dtype=float)
        residual = abs(float(samples[0]))
        for j in range(1, self.flatness_order):
            samples = np.diff(samples)
            residual = max(residual, abs(float(samples[0])) / step ** j)
        return residual


def default_zeta(flatness_order: int = 1) -> PathProfile:
    if flatness_order < 1:
        raise InputError("flatness order must be at least 1", {"flatness_order": flatness_order})
    profile = PathProfile(flatness_order=flatness_order)
    residual = profile.flatness_residual()
    if residual > 1e-10:
        raise NumericalError("time profile is not flat at t = 0", {"flatness_order": flatness_order, "residual": residual})
    return profile


# ----------------------------------------------------------------------
# area gauge
# ----------------------------------------------------------------------


class AreaGauge:
    """a(t) with a(0) = 0 and a' = -zeta' * (mean of w against exp(2 zeta w) dA*)"""

    def __init__(self, w: ScalarField, profile: PathProfile):
        self.profile = profile
        fine = w.grid.oversampled()
        self._fine = fine
        self._w = w.on(fine).values.ravel()
        self._weights = fine.weights.ravel()
        self._w_max = float(np.max(self._w))
        self._area0 = float(np.sum(self._weights * np.exp(2.0 * self._w)))

        sol = solve_ivp(
            lambda t, y: [self.rate(t)],
            (0.0, 0.5),
            [0.0],
            method="DOP853",
            rtol=1e-12,
            atol=1e-14,
            max_step=1.0 / 64.0,
            dense_output=True,
        )
        if not sol.success:
            logger.error(f"Area gauge integration failed: {sol.message}")
            raise NumericalError("area gauge ODE failed", {"reason": sol.message})
        self._solution = sol.sol
        self.a_half = float(sol.y[0, -1])

    def weighted_mean(self, z: float) -> float:
        density = np.exp(2.0 * z * (self._w - self._w_max))
        return float(np.sum(self._weights * self._w * density) / np.sum(self._weights * density))

    def rate(self, t: float) -> float:
        dz = float(self.profile.dzeta(t))
        if dz == 0.0:
            return 0.0
        return -dz * self.weighted_mean(float(self.profile.zeta(t)))

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inner = np.clip(t, 0.0, 0.5)
        values = self._solution(inner.ravel())[0].reshape(t.shape)
        return np.where(t >= 0.5, self.a_half, values)

    def closed_form(self, t: float) -> float:
        """a = 1/2 log(area(g) / area(exp(2 zeta w) g*))"""
        z = float(self.profile.zeta(t))
        return 0.5 * math.log(self._area0 / float(np.sum(self._weights * np.exp(2.0 * z * self._w))))

    def area(self, t: float) -> float:
        z = float(self.profile.zeta(t))
        a = float(self(t))
        return float(np.sum(self._weights * np.exp(2.0 * z * self._w + 2.0 * a)))


def area_gauge(w: ScalarField, profile: PathProfile) -> AreaGauge:
    return AreaGauge(w, profile)


# ----------------------------------------------------------------------
# Poisson problem
# ----------------------------------------------------------------------


def poisson_solve(h: ConformalMetric, rho: ScalarField) -> ScalarField:
    """Mean-zero psi with Delta_h psi = rho, i.e. Delta* psi = exp(2w) rho"""
    fine = h.grid.oversampled()
    source = h.area_density(fine) * rho.on(fine).values
    total = fine.integrate(source)
    scale = fine.integrate(np.abs(source))
    if abs(total) > 1e-9 * max(1.0, scale):
        logger.error(f"Poisson source not compatible: integral {total:.3e}")
        raise InputError("Poisson source must integrate to zero against dA_h", {"integral": total})
    return inverse_laplace_round(ScalarField(fine, source).on(h.grid))


def poisson_residual(h: ConformalMetric, psi: ScalarField, rho: ScalarField) -> float:
    lap = laplace_round(psi).values
    return float(np.max(np.abs(np.exp(-2.0 * h.w.values) * lap - rho.values)))


class PathVelocity:
    """X_t = exp(-2 sigma) grad* psi(t) with sigma = zeta w + a, evaluated at arbitrary points"""

    def __init__(self, w: ScalarField, profile: PathProfile, gauge: AreaGauge):
        self.w = w
        self.grid = w.grid
        self.profile = profile
        self.gauge = gauge
        self._potential = lru_cache(maxsize=8)(self._solve)

    def _solve(self, t: float) -> np.ndarray:
        z = float(self.profile.zeta(t))
        dz = float(self.profile.dzeta(t))
        a = float(self.gauge(t))
        da = self.gauge.rate(t)
        h = ConformalMetric(ScalarField(self.grid, z * self.w.values + a))
        rho = ScalarField(self.grid, -2.0 * (dz * self.w.values + da))
        return poisson_solve(h, rho).coeffs

    def potential(self, t: float) -> ScalarField:
        return ScalarField.from_coeffs(self.grid, self._potential(float(t)))

    def __call__(self, t: float, points: np.ndarray) -> np.ndarray:
        if float(self.profile.dzeta(t)) == 0.0:
            return np.zeros_like(points)
        basis = self.grid.point_basis(points)
        grad = basis.gradient(self._potential(float(t)))
        sigma = float(self.profile.zeta(t)) * basis.values(self.w.coeffs) + float(self.gauge(t))
        return np.exp(-2.0 * sigma)[..., None] * grad


# ----------------------------------------------------------------------
# flow
# ----------------------------------------------------------------------


@dataclass
class FlowMap:
    """Images phi_t(x) and pushed-forward frames at the time nodes"""

    times: np.ndarray
    positions: np.ndarray = field(repr=False)
    frames: np.ndarray = field(repr=False)
    jacobian: np.ndarray = field(repr=False)

    def determinant(self) -> np.ndarray:
        j = self.jacobian
        return j[..., 0, 0] * j[..., 1, 1] - j[..., 0, 1] * j[..., 1, 0]


def _normalize(p: np.ndarray) -> np.ndarray:
    return p / np.linalg.norm(p, axis=-1, keepdims=True)


def _tangent_part(v: np.ndarray, p: np.ndarray) -> np.ndarray:
    return v - np.sum(v * p, axis=-1, keepdims=True) * p


def _frames_at(points: np.ndarray) -> np.ndarray:
    theta, phi = cartesian_to_spherical(points)
    e_theta, e_phi = frame_vectors(theta, phi)
    return np.stack([e_theta, e_phi], axis=-2)


def flow_integrate(
    velocity: VelocityField,
    times: np.ndarray,
    grid: Optional[SphereGrid] = None,
    points: Optional[np.ndarray] = None,
    frames: Optional[np.ndarray] = None,
    max_step: float = 1.0 / 128.0,
    fd_step: float = 1e-5,
) -> FlowMap:
    """
    Classical RK4 for positions in R^3 and tangent vectors J_a = d(phi_t) e_a.

    J follows the variational equation J' = (grad_J X) - (J . X) p; the
    covariant derivative is a central difference along great circles
    projected onto the tangent plane. Positions are renormalized and J
    re-projected after each step. ``times`` may decrease.
    """
    if not max_step > 0:
        raise InputError("flow step must be positive", {"max_step": max_step})
    times = np.asarray(times, dtype=float)
    if points is None:
        if grid is None:
            raise InputError("flow needs a grid or explicit start points")
        points = grid.unit_vectors()
    shape = points.shape[:-1]
    p = _normalize(points.reshape(-1, 3).astype(float))
    J = _frames_at(p) if frames is None else frames.reshape(-1, 2, 3).astype(float)
    n = p.shape[0]
    arc = 2.0 * math.atan(fd_step)

    def rhs(t: float, p: np.ndarray, J: np.ndarray):
        p = _normalize(p)
        norms = np.linalg.norm(J, axis=-1, keepdims=True)
        direction = J / norms
        plus = _normalize(p[:, None, :] + fd_step * direction)
        minus = _normalize(p[:, None, :] - fd_step * direction)
        X = velocity(t, np.concatenate([p, plus.reshape(-1, 3), minus.reshape(-1, 3)]))
        Xp = X[:n]
        X_plus = X[n:3 * n].reshape(n, 2, 3)
        X_minus = X[3 * n:].reshape(n, 2, 3)
        grad = _tangent_part((X_plus - X_minus) / arc, p[:, None, :]) * norms
        dJ = grad - np.sum(J * Xp[:, None, :], axis=-1, keepdims=True) * p[:, None, :]
        return Xp, dJ

    positions = [p.copy()]
    pushed = [J.copy()]
    for t0, t1 in zip(times[:-1], times[1:]):
        steps = max(1, int(math.ceil(abs(t1 - t0) / max_step)))
        dt = (t1 - t0) / steps
        for k in range(steps):
            t = t0 + k * dt
            k1p, k1J = rhs(t, p, J)
            k2p, k2J = rhs(t + 0.5 * dt, p + 0.5 * dt * k1p, J + 0.5 * dt * k1J)
            k3p, k3J = rhs(t + 0.5 * dt, p + 0.5 * dt * k2p, J + 0.5 * dt * k2J)
            k4p, k4J = rhs(t + dt, p + dt * k3p, J + dt * k3J)
            p = _normalize(p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p))
            J = _tangent_part(J + dt / 6.0 * (k1J + 2.0 * k2J + 2.0 * k3J + k4J), p[:, None, :])
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(J))):
            logger.error(f"Flow produced non-finite state at t={t1}")
            raise NumericalError("flow integration produced non-finite values", {"t": float(t1)})
        positions.append(p.copy())
        pushed.append(J.copy())

    positions = np.stack(positions)
    pushed = np.stack(pushed)
    image_frames = _frames_at(positions)
    jacobian = np.einsum("...ai,...bi->...ab", image_frames, pushed)
    flow = FlowMap(
        times=times,
        positions=positions.reshape((len(times),) + shape + (3,)),
        frames=pushed.reshape((len(times),) + shape + (2, 3)),
        jacobian=jacobian.reshape((len(times),) + shape + (2, 2)),
    )
    det = flow.determinant()
    if np.min(det) <= 0:
        logger.error(f"Flow Jacobian degenerate: min det {float(np.min(det)):.3e}")
        raise NumericalError("flow Jacobian is degenerate", {"min_det": float(np.min(det))})
    return flow


# ----------------------------------------------------------------------
# time grid
# ----------------------------------------------------------------------


def chebyshev_times(n_time: int) -> np.ndarray:
    if n_time < 8:
        raise InputError("need at least 8 time nodes", {"n_time": n_time})
    k = np.arange(n_time)
    return 0.5 * (1.0 - np.cos(math.pi * k / (n_time - 1)))


def finite_difference_weights(nodes: np.ndarray, x0: float, order: int) -> np.ndarray:
    """Weights of the interpolating-polynomial derivative of the given order at x0"""
    nodes = np.asarray(nodes, dtype=float)
    scale = float(np.max(np.abs(nodes - x0))) or 1.0
    offsets = (nodes - x0) / scale
    powers = np.arange(nodes.size)
    vander = offsets[None, :] ** powers[:, None] / np.array([math.factorial(k) for k in powers])[:, None]
    rhs = np.zeros(nodes.size)
    rhs[order] = 1.0
    return np.linalg.solve(vander, rhs) / scale ** order


@lru_cache(maxsize=16)
def _derivative_matrix(times: tuple, order: int, width: int = 7) -> np.ndarray:
    t = np.array(times)
    n = t.size
    width = min(width, n)
    D = np.zeros((n, n))
    for k in range(n):
        start = min(max(k - width // 2, 0), n - width)
        idx = np.arange(start, start + width)
        D[k, idx] = finite_difference_weights(t[idx], t[k], order)
    return D


def time_derivative(times: np.ndarray, values: np.ndarray, order: int = 1) -> np.ndarray:
    """d^order/dt^order of samples along axis 0 (7-point local stencils)"""
    D = _derivative_matrix(tuple(np.asarray(times, dtype=float)), order)
    return np.tensordot(D, values, axes=(1, 0))


# ----------------------------------------------------------------------
# the path and its eigen data
# ----------------------------------------------------------------------


@dataclass
class PathEigenData:
    """Eigen data of h(t) composed with phi_t"""

    lambdas: np.ndarray
    gaps: np.ndarray
    u: np.ndarray = field(repr=False)
    potential: np.ndarray = field(repr=False)
    continuity_constant: float = 0.0
    normalization_residual: float = 0.0


@dataclass
class MetricPath:
    """
    g(t) in the round orthonormal frame at every grid node.

    ``metric[k, i, j]`` is the 2x2 matrix of g(t_k) at node (i, j);
    ``curvature`` holds K_{g(t)} = K_{h(t)} o phi_t.
    """

    w: ScalarField
    profile: PathProfile
    gauge: AreaGauge
    times: np.ndarray
    flow: FlowMap = field(repr=False)
    metric: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    curvature: np.ndarray = field(repr=False)
    area: float = 0.0
    rho: float = 1.0
    eigen: Optional[PathEigenData] = None

    @property
    def grid(self) -> SphereGrid:
        return self.w.grid

    def derivative(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        return time_derivative(self.times, values, order)

    def area_ratio(self) -> np.ndarray:
        det = np.linalg.det(self.metric)
        return np.sqrt(det / det[0])

    def area_residual(self) -> float:
        return float(np.max(np.abs(self.area_ratio() - 1.0)))

    def boundary_residual(self) -> float:
        expected = np.exp(2.0 * self.w.values)[..., None, None] * np.eye(2)
        return float(np.max(np.abs(self.metric[0] - expected)))

    def curvature_residual(self) -> float:
        late = self.times >= 0.5
        return float(np.max(np.abs(self.curvature[late] - FOUR_PI / self.area)))

    def static_residual(self) -> float:
        """Largest metric change between adjacent nodes on [1/2, 1]"""
        late = np.where(self.times >= 0.5)[0]
        if late.size < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.metric[late], axis=0))))

    def summary(self) -> PathSummary:
        eigen = self.eigen
        return PathSummary(
            n_time=int(self.times.size),
            times=self.times.tolist(),
            lambdas=[] if eigen is None else eigen.lambdas.tolist(),
            area=self.area,
            rho=self.rho,
            area_residual=self.area_residual(),
            boundary_residual=self.boundary_residual(),
            curvature_residual=self.curvature_residual(),
            continuity_constant=0.0 if eigen is None else eigen.continuity_constant,
            min_lambda=math.nan if eigen is None else float(np.min(eigen.lambdas)),
        )


def _conformal_at(path_w: ScalarField, profile: PathProfile, gauge: AreaGauge, t: float) -> ConformalMetric:
    z = float(profile.zeta(t))
    return ConformalMetric(ScalarField(path_w.grid, z * path_w.values + float(gauge(t))))


@log_execution_time(logger)
def build_path(
    w: ScalarField,
    profile: Optional[PathProfile] = None,
    n_time: Optional[int] = None,
    with_eigen: bool = True,
) -> MetricPath:
    start = time.time()
    profile = profile or default_zeta()
    n_time = n_time or settings.n_time
    g0 = ConformalMetric(w)

    initial = first_eigenpair(g0)
    tol = membership_tolerance(g0)
    if initial.lambda_ <= tol:
        logger.error(f"Path requested from metric outside M+: lambda={initial.lambda_}")
        raise MembershipError(MESSAGES["not_in_m_plus"], {"lambda": initial.lambda_, "tol": tol})

    times = chebyshev_times(n_time)
    gauge = area_gauge(w, profile)
    flow = flow_integrate(PathVelocity(w, profile, gauge), times, grid=w.grid)

    lap_w = laplace_round(w).coeffs
    sigma = np.empty(flow.positions.shape[:-1])
    curvature = np.empty_like(sigma)
    for k, t in enumerate(times):
        basis = w.grid.point_basis(flow.positions[k])
        z = float(profile.zeta(t))
        sigma[k] = z * basis.values(w.coeffs) + float(gauge(t))
        curvature[k] = np.exp(-2.0 * sigma[k]) * (1.0 - z * basis.values(lap_w))

    gram = np.einsum("...ai,...bi->...ab", flow.frames, flow.frames)
    metric = np.exp(2.0 * sigma)[..., None, None] * gram

    total = area(g0)
    path = MetricPath(
        w=w,
        profile=profile,
        gauge=gauge,
        times=times,
        flow=flow,
        metric=metric,
        sigma=sigma,
        curvature=curvature,
        area=total,
        rho=math.sqrt(total / FOUR_PI),
    )
    if with_eigen:
        path.eigen = eigen_along_path(path, initial=initial)

    log_path_metrics(
        logger,
        n_time,
        path.area_residual(),
        path.boundary_residual(),
        float(np.min(path.eigen.lambdas)) if path.eigen else math.nan,
        time.time() - start,
    )
    return path


def eigen_along_path(path: MetricPath, initial: Optional[EigenPair] = None) -> PathEigenData:
    """
    lambda(t) and u(t) = u_{h(t)} o phi_t, normalized in L2(dA_{g(t)}).

    On [1/2, 1] h(t) is fixed, so one solve serves all late nodes.
    """
    times = path.times
    late = np.where(times >= 0.5)[0]
    solve_at: Dict[int, int] = {}
    for k in range(times.size):
        solve_at[k] = int(late[0]) if k in set(late.tolist()) else k
    unique = sorted(set(solve_at.values()))

    def solve(k: int) -> EigenPair:
        if k == 0 and initial is not None:
            return initial
        return first_eigenpair(_conformal_at(path.w, path.profile, path.gauge, float(times[k])))

    with ThreadPoolExecutor(max_workers=settings.num_threads) as pool:
        pairs = dict(zip(unique, pool.map(solve, unique)))

    grid = path.grid
    ell = grid.degrees[:, None].astype(float)
    lambdas = np.empty(times.size)
    gaps = np.empty(times.size)
    u = np.empty(path.sigma.shape)
    potential = np.empty(path.sigma.shape)
    for k in range(times.size):
        pair = pairs[solve_at[k]]
        basis = grid.point_basis(path.flow.positions[k])
        u_k = basis.values(pair.coeffs)
        if np.min(u_k) <= 0:
            logger.error(f"Eigenfunction not positive at t={times[k]:.4f}")
            raise NumericalError("eigenfunction along the path is not positive", {"t": float(times[k])})
        lap_u = basis.values(-ell * (ell + 1.0) * pair.coeffs)
        u[k] = u_k
        lambdas[k] = pair.lambda_
        gaps[k] = pair.gap
        potential[k] = path.curvature[k] - np.exp(-2.0 * path.sigma[k]) * lap_u / u_k

    sqrt_det = np.sqrt(np.linalg.det(path.metric))
    norms = np.sum(grid.weights * u ** 2 * sqrt_det, axis=(1, 2))
    dt = np.diff(times)
    jumps = np.max(np.abs(np.diff(u, axis=0)), axis=(1, 2)) / dt

    tol = membership_tolerance(ConformalMetric(path.w))
    if np.min(lambdas) <= tol:
        k = int(np.argmin(lambdas))
        raise MembershipError(MESSAGES["not_in_m_plus"], {"t": float(times[k]), "lambda": float(lambdas[k])})

    return PathEigenData(
        lambdas=lambdas,
        gaps=gaps,
        u=u,
        potential=potential,
        continuity_constant=float(np.max(jumps)),
        normalization_residual=float(np.max(np.abs(norms - 1.0))),
    )
