"""
Extension of horizon data (S^2, g, H = 0) with g in M+ to an asymptotically
flat manifold of nonnegative scalar curvature, exactly Schwarzschild of
mass m outside a compact set.

Pipeline: metric path -> collar -> neck (bent Schwarzschild glued to the
round end of the collar) -> exact Schwarzschild tail.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from horizonlab.core.config import settings
from horizonlab.core.constants import FOUR_PI, MESSAGES
from horizonlab.core.errors import HorizonError, InputError, NumericalError
from horizonlab.models.responses import BartnikEstimate, BartnikTrial, VerificationReport
from horizonlab.services.collar import (
    CollarMetric,
    build_collar,
    rescale_warp,
    scalar_curvature_collar,
    second_fundamental_form_norm,
    slice_mean_curvature,
)
from horizonlab.services.metric_path import MetricPath, build_path
from horizonlab.services.profiles import (
    Profile,
    bend,
    collar_tail,
    glue,
    match_epsilon,
    psc_margin,
    scalar_curvature_1d,
    schwarzschild_exact,
    tail_slope,
)
from horizonlab.services.sphere_field import ConformalMetric, ScalarField, area
from horizonlab.utils.logger import log_execution_time, log_verification_metrics, setup_logger

logger = setup_logger(__name__)

TAIL_SAMPLES = 4097


def hawking_mass(surface_area: float) -> float:
    """Hawking mass sqrt(area / 16 pi) of a minimal sphere"""
    if not surface_area > 0:
        raise InputError("area must be positive", {"area": surface_area})
    return math.sqrt(surface_area / (4.0 * FOUR_PI))


@dataclass(frozen=True)
class ExtensionOptions:
    totally_geodesic: bool = False
    bandlimit: Optional[int] = None
    n_time: Optional[int] = None
    epsilon_cap: Optional[float] = None


@dataclass
class ExtensionManifold:
    """
    Collar on S^2 x [0, 1/2] followed by a rotationally symmetric neck
    f(s)^2 g* + ds^2 for s >= T/2 (s = T t on the collar's round end) and,
    past ``tail_start``, the Schwarzschild metric u_m(s - shift)^2 g* + ds^2.
    """

    w: ScalarField
    mass: float
    area: float
    collar: CollarMetric = field(repr=False)
    neck: Profile = field(repr=False)
    bent: Profile = field(repr=False)
    T: float
    rho: float
    s0: float
    delta: float
    epsilon_star: float
    shift: float
    options: ExtensionOptions = field(default_factory=ExtensionOptions)

    @property
    def path(self) -> MetricPath:
        return self.collar.path

    @property
    def tail_start(self) -> float:
        return self.neck.b

    def tail(self, s) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Exact Schwarzschild (u, u', u'') at global arclength s >= tail_start"""
        return schwarzschild_exact(self.mass)(np.asarray(s, dtype=float) - self.shift)

    def tail_samples(self, length: Optional[float] = None, n: int = TAIL_SAMPLES) -> np.ndarray:
        length = 100.0 * self.mass if length is None else length
        return np.geomspace(self.tail_start, self.tail_start + length, n)


def adm_mass(ext: ExtensionManifold) -> float:
    """The tail is exactly Schwarzschild, so the ADM mass is its parameter"""
    return ext.mass


# ----------------------------------------------------------------------
# neck construction
# ----------------------------------------------------------------------


def below_right_margin(window: Profile, T: float, rho: float, epsilon_0: float) -> float:
    """
    min of f - f_eps(T) over window samples with s <= s0 whose slope is
    reached on the collar curve eps -> (f_eps(T), f_eps'(T)), eps in (0, eps_0],
    with eps matched to the sample's slope. Positive iff the window lies
    strictly to the right of the collar curve at every height it shares with it.
    """
    top = tail_slope(epsilon_0, T, rho)
    shared = (window.s <= float(window.params["s0"])) & (window.df <= top * (1.0 + 1e-12))
    if not np.any(shared):
        return -math.inf
    k = np.clip(window.df[shared], 0.0, top) * T / rho
    eps = 0.5 * (k * k + np.sqrt(k ** 4 + 4.0 * k * k))
    return float(np.min(window.f[shared] - rho * np.sqrt(1.0 + eps)))


def _neck(m: float, T: float, rho: float, epsilon_0: float) -> Tuple[Profile, Profile, float, float, float]:
    """
    Largest s0 in {m/2, m/4, ...} for which the bent Schwarzschild window
    lies below-right of the collar curve at a matched eps <= eps_0.
    Returns (glued neck, bent profile, s0, delta, eps*).
    """
    s0 = 0.5 * m
    last_error: Optional[HorizonError] = None
    for attempt in range(settings.s0_max_halvings + 1):
        delta = settings.bend_delta_ratio * s0
        try:
            bent = bend(m, s0, delta, amplitude=settings.bend_amplitude, scale=None)
            target = float(bent.df[0])
            eps_star = match_epsilon(target, T, rho, epsilon_0)
            tail = collar_tail(eps_star, T, rho)
            margin = below_right_margin(bent, T, rho, epsilon_0)
            if not margin > 0:
                raise InputError(
                    "bent window does not lie below-right of the collar curve",
                    {"margin": margin, "bent_start": float(bent.f[0]), "collar_end": float(tail.f[-1])},
                )
            neck = glue(tail, bent)
        except HorizonError as e:
            last_error = e
            logger.info(f"Neck at s0={s0:.6g} rejected ({e.message}); halving s0")
            s0 *= 0.5
            continue
        logger.info(f"Neck accepted: s0={s0:.6g}, delta={bent.params['delta']:.6g}, eps*={eps_star:.6g}, halvings={attempt}")
        return neck, bent, s0, float(bent.params["delta"]), eps_star

    details = dict(last_error.details) if last_error is not None else {}
    details["s0"] = s0
    if isinstance(last_error, InputError):
        raise InputError(last_error.message, details)
    raise NumericalError("s0 search exhausted", details)


@log_execution_time(logger)
def build_extension(
    w: ScalarField,
    m: float,
    options: Optional[ExtensionOptions] = None,
    path: Optional[MetricPath] = None,
) -> ExtensionManifold:
    """Build the extension; ``path`` may be supplied to reuse an existing metric path"""
    options = options or ExtensionOptions()
    total = area(ConformalMetric(w))
    if not 4.0 * FOUR_PI * m * m > total:
        logger.error(f"Mass {m} below Hawking mass {hawking_mass(total)}")
        raise InputError(MESSAGES["mass_too_small"], {"mass": m, "hawking_mass": hawking_mass(total), "area": total})

    path = path or build_path(w, n_time=options.n_time)
    collar = rescale_warp(build_collar(path, epsilon_cap=options.epsilon_cap))
    T = collar.T
    rho = path.rho

    neck, bent, s0, delta, eps_star = _neck(m, T, rho, collar.epsilon_0)
    collar = collar.with_epsilon(eps_star)
    shift = float(neck.params["shift"])

    return ExtensionManifold(
        w=w,
        mass=m,
        area=total,
        collar=collar,
        neck=neck,
        bent=bent,
        T=T,
        rho=rho,
        s0=s0,
        delta=delta,
        epsilon_star=eps_star,
        shift=shift,
        options=options,
    )


# ----------------------------------------------------------------------
# verification
# ----------------------------------------------------------------------


def _tail_curvature(ext: ExtensionManifold) -> np.ndarray:
    u, du, ddu = ext.tail(ext.tail_samples())
    return 2.0 * (1.0 - du ** 2) / u ** 2 - 4.0 * ddu / u


def _glued_curvature(ext: ExtensionManifold) -> np.ndarray:
    """
    R = 4 margin / f on the neck samples in [glue start, s0), leaving out
    bent samples whose bump underflows to zero
    """
    neck = ext.neck
    start = float(neck.params["b1"]) - float(neck.params["eta"])
    local = neck.s - ext.shift
    excess, _ = ext.bent.evaluator.excess(local)
    keep = (neck.s >= start) & (local < ext.s0) & ((local < ext.s0 - ext.delta) | (excess > 0))
    return 4.0 * psc_margin(neck)[keep] / neck.f[keep]


def verify(ext: ExtensionManifold) -> VerificationReport:
    """Evaluate every invariant; failures become flags, never exceptions"""
    start = time.time()
    collar = ext.collar
    R_collar = scalar_curvature_collar(collar)
    R_neck = scalar_curvature_1d(ext.neck)
    R_tail = _tail_curvature(ext)
    R_glued = _glued_curvature(ext)

    collar_H = np.stack([slice_mean_curvature(collar, float(t)) for t in collar.times[1:]])
    neck_H = 2.0 * ext.neck.df / ext.neck.f
    min_interior_H = float(min(np.min(collar_H), np.min(neck_H)))
    H0 = float(np.max(np.abs(slice_mean_curvature(collar, 0.0))))

    m_h = hawking_mass(ext.area)
    m_adm = adm_mass(ext)
    penrose = 4.0 * FOUR_PI * m_adm ** 2 - ext.area
    boundary = ext.path.boundary_residual()

    flags: Dict[str, bool] = {
        "collar_positive": bool(np.min(R_collar) > 0),
        "neck_nonnegative": bool(np.min(psc_margin(ext.neck)) >= -1e-8),
        "glued_positive": bool(R_glued.size > 0 and np.min(R_glued) > 0),
        "tail_scalar_flat": bool(np.max(np.abs(R_tail)) <= 1e-8),
        "boundary_isometric": boundary <= 1e-6,
        "boundary_minimal": H0 <= 1e-6,
        "mean_convex": min_interior_H > 0,
        "penrose": penrose > 0,
    }
    if ext.options.totally_geodesic:
        flags["totally_geodesic"] = second_fundamental_form_norm(collar, 0) <= 1e-5

    log_verification_metrics(logger, "extension", flags, time.time() - start)
    return VerificationReport(
        min_R_collar=float(np.min(R_collar)),
        min_R_neck=float(np.min(R_neck)),
        min_R_glued=float(np.min(R_glued)) if R_glued.size else float("nan"),
        max_abs_R_tail=float(np.max(np.abs(R_tail))),
        boundary_residual=boundary,
        H0_residual=H0,
        min_interior_H=min_interior_H,
        hawking_mass=m_h,
        adm_mass=m_adm,
        penrose_margin=penrose,
        flags=flags,
        passed=all(flags.values()),
    )


# ----------------------------------------------------------------------
# Bartnik mass
# ----------------------------------------------------------------------


def _trial(w: ScalarField, m: float, path: MetricPath, options: ExtensionOptions) -> BartnikTrial:
    try:
        report = verify(build_extension(w, m, options, path=path))
    except HorizonError as e:
        return BartnikTrial(mass=m, success=False, reason=e.message)
    if not report.passed:
        failed = sorted(k for k, v in report.flags.items() if not v)
        return BartnikTrial(mass=m, success=False, reason="failed flags: " + ", ".join(failed))
    return BartnikTrial(mass=m, success=True)


@log_execution_time(logger)
def bartnik_mass_estimate(
    w: ScalarField,
    rel_tol: float = 0.05,
    options: Optional[ExtensionOptions] = None,
    seed: Optional[int] = None,
) -> BartnikEstimate:
    """
    Bisection on m in (m_H, 2 m_H]. The lower end is the Hawking mass; the
    upper end is the smallest mass whose extension verified.
    """
    if not rel_tol > 0:
        raise InputError("relative tolerance must be positive", {"rel_tol": rel_tol})
    options = options or ExtensionOptions()
    m_h = hawking_mass(area(ConformalMetric(w)))
    path = build_path(w, n_time=options.n_time)

    trials: List[BartnikTrial] = []
    lower, upper = m_h, 2.0 * m_h
    first = _trial(w, upper, path, options)
    trials.append(first)
    if not first.success:
        logger.error(f"Extension fails even at twice the Hawking mass: {first.reason}")
        raise NumericalError("no verified extension at 2 m_H", {"mass": upper, "reason": first.reason})

    # The target itself is tried alongside the first midpoint
    target = (1.0 + rel_tol) * m_h
    candidates = [target, 0.5 * (lower + upper)]
    while upper > target and upper - lower > rel_tol * m_h:
        with ThreadPoolExecutor(max_workers=settings.num_threads) as pool:
            results = list(pool.map(lambda m: _trial(w, m, path, options), candidates))
        trials += results
        succeeded = [p.mass for p in results if p.success]
        failed = [p.mass for p in results if not p.success and p.mass < upper]
        if succeeded:
            upper = min(succeeded)
        if failed:
            lower = max([lower] + failed)
        candidates = [0.5 * (lower + upper)]

    return BartnikEstimate(
        seed=settings.seed if seed is None else seed,
        hawking_mass=m_h,
        lower=m_h,
        upper=upper,
        rel_tol=rel_tol,
        trials=trials,
    )
