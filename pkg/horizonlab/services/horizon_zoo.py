"""
Conformal perturbations w = v + alpha h, h = -cos(n theta)/n, that stay in M+
while the negative part of the Gauss curvature grows without bound in n.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from horizonlab.core.config import settings
from horizonlab.core.constants import FOUR_PI, ZOO_BAND
from horizonlab.core.errors import InputError, NumericalError
from horizonlab.models.responses import ZooReport, ZooRow
from horizonlab.services.sphere_field import (
    ConformalMetric,
    ScalarField,
    SphereGrid,
    get_grid,
    grad_norm_squared,
    laplace_round,
    negative_curvature_integral,
    spherical_to_cartesian,
    total_curvature,
)
from horizonlab.services.stability import certificate_from_eigenpair, first_eigenpair, q_operator
from horizonlab.utils.logger import log_execution_time, setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class ZooSpec:
    v: ScalarField
    alpha: float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise InputError("alpha must lie in [0, 1)", {"alpha": self.alpha})
        if self.n < 1:
            raise InputError("n must be a positive integer", {"n": self.n})

    @property
    def grid(self) -> SphereGrid:
        bandlimit = max(self.v.grid.bandlimit, 2 * self.n + 16)
        return get_grid(bandlimit, zonal=self.v.is_zonal())

    def h(self) -> ScalarField:
        n = self.n
        return ScalarField.from_function(self.grid, lambda theta, phi: -np.cos(n * theta) / n)

    def w(self) -> ScalarField:
        return self.v.on(self.grid) + self.h() * self.alpha

    @property
    def c1_distance(self) -> float:
        """|alpha h|_C1 with sup|h| = 1/n and sup|grad h| = 1"""
        return self.alpha * (1.0 + 1.0 / self.n)


def openness_margin(v: ScalarField, w: ScalarField, phi: ScalarField, grid: Optional[SphereGrid] = None) -> float:
    """
    min over nodes of Q_v phi - |grad*(2 phi - w - v)| |grad*(w - v)|.
    Positive values certify exp(2w) g* in M+.
    """
    grid = grid or w.grid.oversampled()
    base = w.grid
    v_b, phi_b = v.on(base), phi.on(base)
    q = q_operator(v_b, phi_b, grid).values
    spread = ScalarField.from_coeffs(base, 2.0 * phi_b.coeffs - w.coeffs - v_b.coeffs)
    step = ScalarField.from_coeffs(base, w.coeffs - v_b.coeffs)
    penalty = np.sqrt(grad_norm_squared(spread, grid) * grad_norm_squared(step, grid))
    return float(np.min(q - penalty))


def _base_certificate(v: ScalarField) -> ScalarField:
    """phi with Q_v phi > 0; phi = 0 whenever Q_v 0 = 1 - |grad v|^2 is already positive"""
    fine = v.grid.oversampled()
    if float(np.max(grad_norm_squared(v, fine))) < 1.0:
        return ScalarField.constant(v.grid, 0.0)
    cert = certificate_from_eigenpair(ConformalMetric(v))
    return cert.phi


def certify_alpha(spec: ZooSpec) -> ZooSpec:
    """Halve alpha until the openness margin is positive"""
    phi = _base_certificate(spec.v)
    for attempt in range(settings.zoo_max_shrinks + 1):
        if spec.alpha == 0.0:
            return spec
        margin = openness_margin(spec.v, spec.w(), phi)
        if margin > 0:
            if attempt:
                logger.info(f"Zoo alpha certified at {spec.alpha:.6g} after {attempt} halvings")
            return spec
        spec = replace(spec, alpha=0.5 * spec.alpha)
    logger.error(f"Zoo alpha underflow for n={spec.n}")
    raise NumericalError("alpha underflow while certifying the zoo metric", {"alpha": spec.alpha, "n": spec.n})


def zoo_metric(spec: ZooSpec) -> ConformalMetric:
    return ConformalMetric(certify_alpha(spec).w())


# ----------------------------------------------------------------------
# the negative-curvature estimate
# ----------------------------------------------------------------------


def band_measure(n: int, band=ZOO_BAND) -> float:
    """Round area of {theta in band : cos(n theta) >= 1/2}"""
    lo, hi = band
    total = 0.0
    k_min = int(math.floor((n * lo + math.pi / 3.0) / (2.0 * math.pi)))
    k_max = int(math.ceil((n * hi - math.pi / 3.0) / (2.0 * math.pi)))
    for k in range(k_min, k_max + 1):
        a = max(lo, (2.0 * math.pi * k - math.pi / 3.0) / n)
        b = min(hi, (2.0 * math.pi * k + math.pi / 3.0) / n)
        if b > a:
            total += 2.0 * math.pi * (math.cos(a) - math.cos(b))
    return total


def band_sup(spec: ZooSpec, band=ZOO_BAND) -> float:
    """sup over the band of 1 - Delta* v - alpha sin(n theta) cot(theta), by dense sampling"""
    theta = np.linspace(band[0], band[1], max(4096, 64 * spec.n))
    phi = spec.v.grid.phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    lap_v = laplace_round(spec.v)
    lap_values = spec.v.grid.evaluate(lap_v.coeffs, spherical_to_cartesian(T, P))
    values = 1.0 - lap_values - spec.alpha * np.sin(spec.n * T) / np.tan(T)
    return float(np.max(values))


def negative_part_report(spec: ZooSpec, certify: bool = True) -> ZooRow:
    spec = certify_alpha(spec) if certify else spec
    g = ConformalMetric(spec.w())
    pair = first_eigenpair(g)
    mu = band_measure(spec.n)
    Lam = band_sup(spec)
    phi = _base_certificate(spec.v)
    return ZooRow(
        n=spec.n,
        alpha=spec.alpha,
        bandlimit=spec.grid.bandlimit,
        lambda_1=pair.lambda_,
        negative_curvature=negative_curvature_integral(g),
        mu=mu,
        Lambda=Lam,
        lower_bound=mu * max(0.5 * spec.alpha * spec.n - Lam, 0.0),
        gauss_bonnet_residual=total_curvature(g) - FOUR_PI,
        openness_margin=openness_margin(spec.v, spec.w(), phi),
        c1_distance=spec.c1_distance,
    )


@log_execution_time(logger)
def zoo_sweep(v: ScalarField, alpha: float, ns: Iterable[int], seed: Optional[int] = None) -> ZooReport:
    """One row per n; alpha is certified once since the margin does not depend on n"""
    ns = list(ns)
    if not ns:
        raise InputError("zoo needs at least one n")
    alpha = certify_alpha(ZooSpec(v, alpha, ns[0])).alpha
    with ThreadPoolExecutor(max_workers=settings.num_threads) as pool:
        rows = list(pool.map(lambda n: negative_part_report(ZooSpec(v, alpha, n)), ns))
    return ZooReport(seed=settings.seed if seed is None else seed, rows=rows)


def density_demo(v: ScalarField, c: float, alpha0: float) -> ZooSpec:
    """Double n until the negative curvature integral reaches c at a certified alpha <= alpha0"""
    if not c > 0:
        raise InputError("target must be positive", {"c": c})
    spec = certify_alpha(ZooSpec(v, alpha0, 2))
    while spec.n <= settings.zoo_max_n:
        reached = negative_curvature_integral(ConformalMetric(spec.w()))
        logger.debug(f"density demo n={spec.n}: negative curvature {reached:.6g}")
        if reached >= c:
            return certify_alpha(spec)
        spec = replace(spec, n=2 * spec.n)
    raise NumericalError("n exceeded the configured maximum before reaching the target", {"c": c, "max_n": settings.zoo_max_n})
