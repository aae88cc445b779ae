"""
Collar metric gamma = (1 + eps t^2) g(t) + A^2 u(t, .)^2 dt^2 on S^2 x [0, 1].

All tensor work happens in the round orthonormal frame at each grid node,
with time derivatives taken by finite differences along the path.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from horizonlab.core.config import settings
from horizonlab.core.constants import MESSAGES
from horizonlab.core.errors import InputError, MembershipError, NumericalError
from horizonlab.models.responses import CollarReport
from horizonlab.services.metric_path import MetricPath
from horizonlab.utils.logger import log_execution_time, setup_logger

logger = setup_logger(__name__)


def block_scalar_curvature(
    K_h: np.ndarray,
    lap_v_over_v: np.ndarray,
    v: np.ndarray,
    dv_over_v: np.ndarray,
    tr_hdot: np.ndarray,
    tr_hddot: np.ndarray,
    hdot_norm_sq: np.ndarray,
) -> np.ndarray:
    """
    Scalar curvature of h(t) + v^2 dt^2:

        2 K_h - 2 Delta_h v / v
        + v^-2 [ -tr_h h'' - (tr_h h')^2 / 4 + (v'/v) tr_h h' + 3/4 |h'|_h^2 ]
    """
    bracket = -tr_hddot - 0.25 * tr_hdot ** 2 + dv_over_v * tr_hdot + 0.75 * hdot_norm_sq
    return 2.0 * K_h - 2.0 * lap_v_over_v + bracket / v ** 2


def warped_terms(f, df, ddf) -> Dict[str, np.ndarray]:
    """Inputs of the block formula for f(s)^2 g* + ds^2"""
    f, df, ddf = (np.asarray(x, dtype=float) for x in (f, df, ddf))
    zero = np.zeros_like(f)
    return {
        "K_h": 1.0 / f ** 2,
        "lap_v_over_v": zero,
        "v": np.ones_like(f),
        "dv_over_v": zero,
        "tr_hdot": 4.0 * df / f,
        "tr_hddot": 4.0 * (df ** 2 + f * ddf) / f ** 2,
        "hdot_norm_sq": 8.0 * df ** 2 / f ** 2,
    }


@dataclass
class CollarMetric:
    """
    Collar over a metric path. ``warp`` holds v = A u at every (time, node);
    after :func:`rescale_warp` the constant is absorbed and ``A`` reads 1.
    """

    path: MetricPath
    epsilon: float
    A: float
    epsilon_0: float
    A_0: float
    warp: np.ndarray = field(repr=False)
    rescaled: bool = False

    @property
    def times(self) -> np.ndarray:
        return self.path.times

    @property
    def stretch(self) -> np.ndarray:
        """1 + eps t^2 broadcast against node arrays"""
        c = 1.0 + self.epsilon * self.times ** 2
        return c.reshape((-1,) + (1,) * (self.warp.ndim - 1))

    @property
    def T(self) -> float:
        """Warp constant on t in [1/2, 1]"""
        late = self.times >= 0.5
        return float(np.mean(self.warp[late]))

    def with_epsilon(self, epsilon: float) -> "CollarMetric":
        if not 0.0 < epsilon <= self.epsilon_0:
            raise InputError("epsilon must lie in (0, epsilon_0]", {"epsilon": epsilon, "epsilon_0": self.epsilon_0})
        return replace(self, epsilon=epsilon)


def make_collar(path: MetricPath, epsilon: float, A: float, epsilon_0: Optional[float] = None, A_0: Optional[float] = None) -> CollarMetric:
    if path.eigen is None:
        raise InputError("collar needs a path with eigen data")
    epsilon_0 = epsilon if epsilon_0 is None else epsilon_0
    A_0 = A if A_0 is None else A_0
    if not 0.0 < epsilon <= epsilon_0:
        raise InputError("epsilon must lie in (0, epsilon_0]", {"epsilon": epsilon, "epsilon_0": epsilon_0})
    if A < A_0:
        raise InputError("A must be at least A_0", {"A": A, "A_0": A_0})
    return CollarMetric(path=path, epsilon=epsilon, A=A, epsilon_0=epsilon_0, A_0=A_0, warp=A * path.eigen.u)


def rescale_warp(c: CollarMetric) -> CollarMetric:
    """Absorb A into u so only eps remains free"""
    if c.rescaled:
        return c
    return replace(c, A=1.0, A_0=1.0, rescaled=True)


# ----------------------------------------------------------------------
# time derivatives and traces
# ----------------------------------------------------------------------


def _inverse_2x2(m: np.ndarray) -> np.ndarray:
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    inv = np.empty_like(m)
    inv[..., 0, 0] = m[..., 1, 1]
    inv[..., 1, 1] = m[..., 0, 0]
    inv[..., 0, 1] = -m[..., 0, 1]
    inv[..., 1, 0] = -m[..., 1, 0]
    return inv / det[..., None, None]


def _metric_derivatives(c: CollarMetric) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """h, h', h'' with the eps terms differentiated exactly"""
    g = c.path.metric
    g1 = c.path.derivative(g, 1)
    g2 = c.path.derivative(g, 2)
    t = c.times.reshape((-1,) + (1,) * (g.ndim - 1))
    eps = c.epsilon
    stretch = 1.0 + eps * t ** 2
    h = stretch * g
    h1 = 2.0 * eps * t * g + stretch * g1
    h2 = 2.0 * eps * g + 4.0 * eps * t * g1 + stretch * g2
    return h, h1, h2


def _trace(inv: np.ndarray, m: np.ndarray) -> np.ndarray:
    return np.einsum("...ab,...ba->...", inv, m)


def finite_difference_traces(c: CollarMetric) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """tr_h h', tr_h h'' and |h'|_h^2 from sampled components"""
    h, h1, h2 = _metric_derivatives(c)
    inv = _inverse_2x2(h)
    mixed = np.einsum("...ab,...bc->...ac", inv, h1)
    return _trace(inv, h1), _trace(inv, h2), np.einsum("...ab,...ba->...", mixed, mixed)


def closed_form_traces(c: CollarMetric, tolerance: float = 1e-4) -> Tuple[np.ndarray, np.ndarray]:
    """
    tr_h h' = 4 eps t / (1 + eps t^2) and tr_h h'' = 4 eps / (1 + eps t^2) + tr_g g''.
    Valid only along a path with constant area form.
    """
    residual = c.path.area_residual()
    if residual > tolerance:
        logger.error(f"Closed-form traces requested on a path with area residual {residual:.3e}")
        raise NumericalError("area form is not constant along the path", {"area_residual": residual})
    g = c.path.metric
    tr_g_gddot = _trace(_inverse_2x2(g), c.path.derivative(g, 2))
    stretch = c.stretch
    t = c.times.reshape(stretch.shape)
    tr_hdot = np.broadcast_to(4.0 * c.epsilon * t / stretch, g.shape[:-2])
    tr_hddot = 4.0 * c.epsilon / stretch + tr_g_gddot
    return np.array(tr_hdot), tr_hddot


def trace_residual(c: CollarMetric) -> float:
    fd_dot, fd_ddot, _ = finite_difference_traces(c)
    cf_dot, cf_ddot = closed_form_traces(c, tolerance=math.inf)
    return float(max(np.max(np.abs(fd_dot - cf_dot)), np.max(np.abs(fd_ddot - cf_ddot))))


# ----------------------------------------------------------------------
# curvature
# ----------------------------------------------------------------------


def _log_warp_rate(c: CollarMetric) -> np.ndarray:
    return c.path.derivative(np.log(c.warp), 1)


def scalar_curvature_collar(c: CollarMetric, noise_tolerance: float = 0.1) -> np.ndarray:
    """
    R_gamma at every (time node, grid node).

    K_h - Delta_h v / v = (K_g - Delta_g u / u) / (1 + eps t^2), and the
    bracket in the path frame is the eigen potential composed with phi_t.
    """
    eigen = c.path.eigen
    stretch = c.stretch
    tr_dot, tr_ddot, norm_sq = finite_difference_traces(c)
    noise = trace_residual(c)
    if noise > noise_tolerance:
        logger.error(f"Time derivatives too noisy for the collar: {noise:.3e}")
        raise NumericalError("insufficient time resolution for the collar curvature", {"trace_residual": noise})

    K_h = c.path.curvature / stretch
    lap_v_over_v = (c.path.curvature - eigen.potential) / stretch
    return block_scalar_curvature(K_h, lap_v_over_v, c.warp, _log_warp_rate(c), tr_dot, tr_ddot, norm_sq)


def bound_form_curvature(c: CollarMetric) -> np.ndarray:
    """2 mu + v^-2 [-tr_h h'' + (v'/v) tr_h h'], a lower bound for R_gamma"""
    tr_dot, tr_ddot, _ = finite_difference_traces(c)
    mu = c.path.eigen.potential / c.stretch
    return 2.0 * mu + (-tr_ddot + _log_warp_rate(c) * tr_dot) / c.warp ** 2


def slice_mean_curvature(c: CollarMetric, t0: float) -> np.ndarray:
    """H = tr_h h' / (2 v) on the slice {t = t0}, with v interpolated in time"""
    if not 0.0 <= t0 <= 1.0:
        raise InputError("slice time must lie in [0, 1]", {"t0": t0})
    times = c.times
    k = int(np.clip(np.searchsorted(times, t0), 1, times.size - 1))
    lam = (t0 - times[k - 1]) / (times[k] - times[k - 1])
    v = (1.0 - lam) * c.warp[k - 1] + lam * c.warp[k]
    tr_dot = 4.0 * c.epsilon * t0 / (1.0 + c.epsilon * t0 ** 2)
    return tr_dot / (2.0 * v)


def second_fundamental_form_norm(c: CollarMetric, k: int = 0) -> float:
    """sup |h'|_h / (2 v) on the k-th slice"""
    _, _, norm_sq = finite_difference_traces(c)
    return float(np.max(np.sqrt(np.maximum(norm_sq[k], 0.0)) / (2.0 * c.warp[k])))


# ----------------------------------------------------------------------
# parameter selection
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class BoundTerms:
    """Sampled quantities entering the sufficient positivity bound"""

    min_lambda: float
    min_u_sq: float
    sup_trace_gddot: float
    sup_log_u_rate: float

    def bound(self, A: float, epsilon: float) -> float:
        return (
            2.0 * A ** 2 * self.min_lambda * self.min_u_sq
            - 4.0 * epsilon
            - 2.0 * self.sup_trace_gddot
            - 4.0 * epsilon * self.sup_log_u_rate
        )

    def penalty(self, epsilon: float) -> float:
        return 4.0 * epsilon + 2.0 * self.sup_trace_gddot + 4.0 * epsilon * self.sup_log_u_rate


def bound_terms(path: MetricPath) -> BoundTerms:
    eigen = path.eigen
    if eigen is None:
        raise InputError("parameter selection needs eigen data along the path")
    g = path.metric
    tr_g_gddot = _trace(_inverse_2x2(g), path.derivative(g, 2))
    return BoundTerms(
        min_lambda=float(np.min(eigen.lambdas)),
        min_u_sq=float(np.min(eigen.u) ** 2),
        sup_trace_gddot=float(np.max(np.abs(tr_g_gddot))),
        sup_log_u_rate=float(np.max(np.abs(path.derivative(np.log(eigen.u), 1)))),
    )


def select_parameters(path: MetricPath, epsilon_cap: Optional[float] = None, safety: Optional[float] = None) -> Tuple[float, float]:
    """
    eps_0 is the cap rounded down by 10%; A_0 is the smallest A with
    bound >= safety * penalty, rounded up by 10%.
    """
    epsilon_cap = settings.collar_epsilon_cap if epsilon_cap is None else epsilon_cap
    safety = settings.collar_safety if safety is None else safety
    if epsilon_cap <= 0:
        raise InputError("epsilon cap must be positive", {"epsilon_cap": epsilon_cap})

    terms = bound_terms(path)
    if terms.min_lambda <= 0:
        logger.error(f"Collar parameters requested on a path leaving M+: min lambda {terms.min_lambda}")
        raise MembershipError(MESSAGES["not_in_m_plus"], {"min_lambda": terms.min_lambda})

    epsilon_0 = 0.9 * epsilon_cap
    needed = (1.0 + safety) * terms.penalty(epsilon_0)
    A_min = math.sqrt(needed / (2.0 * terms.min_lambda * terms.min_u_sq))
    A_0 = 1.1 * A_min
    logger.info(
        "Collar parameters selected",
        extra={"event_type": "collar_parameters", "epsilon_0": epsilon_0, "A_0": A_0, "bound": terms.bound(A_0, epsilon_0)},
    )
    return epsilon_0, A_0


@log_execution_time(logger)
def build_collar(
    path: MetricPath,
    epsilon: Optional[float] = None,
    epsilon_cap: Optional[float] = None,
) -> CollarMetric:
    """Select (eps_0, A_0), then double A while the full-formula minimum of R is not positive"""
    epsilon_0, A_0 = select_parameters(path, epsilon_cap)
    epsilon = epsilon_0 if epsilon is None else epsilon
    A = A_0
    for _ in range(settings.collar_max_doublings + 1):
        collar = make_collar(path, epsilon, A, epsilon_0, A_0)
        min_R = float(np.min(scalar_curvature_collar(collar)))
        if min_R > 0:
            return collar
        logger.info(f"Collar curvature not positive (min R = {min_R:.3e}) at A = {A:.4g}; doubling")
        A *= 2.0
    raise NumericalError("collar scalar curvature stayed non-positive", {"A": A, "epsilon": epsilon})


def collar_report(c: CollarMetric) -> CollarReport:
    R = scalar_curvature_collar(c)
    k, i, j = np.unravel_index(int(np.argmin(R)), R.shape)
    grid = c.path.grid
    H = np.stack([slice_mean_curvature(c, float(t)) for t in c.times])
    return CollarReport(
        epsilon=c.epsilon,
        A=c.A,
        epsilon_0=c.epsilon_0,
        A_0=c.A_0,
        min_R=float(R[k, i, j]),
        argmin={"t": float(c.times[k]), "theta": float(grid.theta[i]), "phi": float(grid.phi[j])},
        bound_margin=float(np.min(bound_form_curvature(c))),
        times=c.times.tolist(),
        min_H=np.min(H.reshape(H.shape[0], -1), axis=1).tolist(),
        H0_residual=float(np.max(np.abs(H[0]))),
        second_fundamental_form_norm=second_fundamental_form_norm(c, 0),
        trace_residual=trace_residual(c),
    )
