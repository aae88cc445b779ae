"""
Rotationally symmetric profiles f(s)^2 g* + ds^2: curvature, Schwarzschild, bending, collar tails and gluing
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq, newton
from scipy.special import expit, roots_legendre

from horizonlab.core.config import settings
from horizonlab.core.constants import MESSAGES
from horizonlab.core.errors import InputError, NumericalError
from horizonlab.utils.logger import setup_logger

logger = setup_logger(__name__)

Evaluator = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]

_GL_NODES, _GL_WEIGHTS = roots_legendre(64)
_CONV_NODES, _CONV_WEIGHTS = roots_legendre(32)


class Profile:
    """
    Samples of f, f', f'' on an increasing arclength grid.

    ``evaluator`` gives exact values off the sample grid when a closed form
    is known; ``exact_margin`` carries a cancellation-free psc margin for
    profiles whose margin is exponentially small (bent Schwarzschild).
    """

    def __init__(
        self,
        s: np.ndarray,
        f: np.ndarray,
        df: np.ndarray,
        ddf: np.ndarray,
        kind: str = "sampled",
        params: Optional[Dict[str, float]] = None,
        evaluator: Optional[Evaluator] = None,
        exact_margin: Optional[np.ndarray] = None,
    ):
        self.s = np.asarray(s, dtype=float)
        self.f = np.asarray(f, dtype=float)
        self.df = np.asarray(df, dtype=float)
        self.ddf = np.asarray(ddf, dtype=float)
        if self.s.ndim != 1 or self.s.size < 2:
            raise InputError("profile needs at least two samples")
        if not (self.f.shape == self.df.shape == self.ddf.shape == self.s.shape):
            raise InputError("profile sample arrays differ in length")
        if np.any(np.diff(self.s) <= 0):
            raise InputError("profile arclength samples must be strictly increasing")
        if not all(np.all(np.isfinite(x)) for x in (self.s, self.f, self.df, self.ddf)):
            raise InputError("profile contains non-finite samples")
        self.kind = kind
        self.params = params or {}
        self.evaluator = evaluator
        self.exact_margin = None if exact_margin is None else np.asarray(exact_margin, dtype=float)

    @property
    def a(self) -> float:
        return float(self.s[0])

    @property
    def b(self) -> float:
        return float(self.s[-1])

    def at(self, s) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        s = np.asarray(s, dtype=float)
        if self.evaluator is not None:
            return self.evaluator(s)
        return (
            np.interp(s, self.s, self.f),
            np.interp(s, self.s, self.df),
            np.interp(s, self.s, self.ddf),
        )

    def restrict(self, a: float, b: float) -> "Profile":
        mask = (self.s >= a) & (self.s <= b)
        margin = None if self.exact_margin is None else self.exact_margin[mask]
        return Profile(
            self.s[mask], self.f[mask], self.df[mask], self.ddf[mask],
            self.kind, dict(self.params), self.evaluator, margin,
        )

    def shifted(self, offset: float) -> "Profile":
        evaluator = None
        if self.evaluator is not None:
            base = self.evaluator
            evaluator = lambda x: base(np.asarray(x, dtype=float) - offset)
        return Profile(
            self.s + offset, self.f, self.df, self.ddf,
            self.kind, dict(self.params), evaluator, self.exact_margin,
        )

    def consistency_residual(self) -> float:
        """Midpoint difference quotient against f', scaled by (1 + sup|f''|) * step"""
        h = np.diff(self.s)
        quotient = np.diff(self.f) / h
        mid = 0.5 * (self.df[1:] + self.df[:-1])
        scale = (1.0 + np.max(np.abs(self.ddf))) * h
        return float(np.max(np.abs(quotient - mid) / scale))


@dataclass(frozen=True)
class OmegaBound:
    """Admissible f'' values at (f, f') = (alpha, beta) lie below ``sup``"""

    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError("alpha must be positive", {"alpha": self.alpha})

    @property
    def sup(self) -> float:
        return (1.0 - self.beta ** 2) / (2.0 * self.alpha)

    def contains(self, value: float) -> bool:
        return value < self.sup


# ----------------------------------------------------------------------
# curvature of warped profiles
# ----------------------------------------------------------------------


def _require_positive(p: Profile) -> None:
    if np.any(p.f <= 0):
        logger.error(f"Profile of kind {p.kind} has non-positive samples")
        raise InputError("profile must be positive", {"min_f": float(np.min(p.f)), "kind": p.kind})


def psc_margin(p: Profile) -> np.ndarray:
    """(1 - f'^2) / (2f) - f''; positive exactly where R > 0"""
    _require_positive(p)
    if p.exact_margin is not None:
        return p.exact_margin
    return (1.0 - p.df ** 2) / (2.0 * p.f) - p.ddf


def psc_test(p: Profile) -> bool:
    return bool(np.all(psc_margin(p) > 0.0))


def scalar_curvature_1d(p: Profile) -> np.ndarray:
    """R = 2 f^-2 (1 - f'^2) - 4 f''/f"""
    _require_positive(p)
    if p.exact_margin is not None:
        return 4.0 * p.exact_margin / p.f
    return 2.0 * (1.0 - p.df ** 2) / p.f ** 2 - 4.0 * p.ddf / p.f


def mean_curvature_1d(p: Profile, s) -> np.ndarray:
    """Mean curvature 2 f'/f of the slice at s"""
    f, df, _ = p.at(s)
    return 2.0 * df / f


def profile_table(p: Profile) -> np.ndarray:
    """Columns s, f, f', f'', R, psc margin, H"""
    return np.column_stack(
        [p.s, p.f, p.df, p.ddf, scalar_curvature_1d(p), psc_margin(p), 2.0 * p.df / p.f]
    )


# ----------------------------------------------------------------------
# Schwarzschild
# ----------------------------------------------------------------------


def schwarzschild_arclength(m: float, u) -> np.ndarray:
    """Radial arclength from the horizon u = 2m to area radius u"""
    u = np.asarray(u, dtype=float)
    root = np.sqrt(np.maximum(u - 2.0 * m, 0.0))
    return np.sqrt(u) * root + 2.0 * m * np.log((np.sqrt(u) + root) / math.sqrt(2.0 * m))


def schwarzschild_radius(m: float, s) -> np.ndarray:
    """Inverse of schwarzschild_arclength, solved in x = sqrt(u - 2m)"""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise InputError("arclength must be nonnegative", {"min_s": float(np.min(s))})
    two_m = 2.0 * m

    def residual(x):
        return x * np.sqrt(x * x + two_m) + two_m * np.arcsinh(x / math.sqrt(two_m)) - s

    def slope(x):
        return 2.0 * np.sqrt(x * x + two_m)

    shape = s.shape
    s = np.atleast_1d(s).ravel()
    x0 = s / (2.0 * math.sqrt(two_m)) / np.sqrt(1.0 + s / (4.0 * m))
    x = newton(residual, x0, fprime=slope, tol=1e-15 * (1.0 + float(np.max(x0))), maxiter=100)
    return (two_m + np.asarray(x) ** 2).reshape(shape)


def schwarzschild_exact(m: float) -> Evaluator:
    """Closed-form (u, u', u'') at arclength s"""

    def evaluate(s):
        u = schwarzschild_radius(m, s)
        du = np.sqrt(np.maximum(1.0 - 2.0 * m / u, 0.0))
        return u, du, m / u ** 2

    return evaluate


def schwarzschild_profile(m: float, s_max: float, samples_per_unit: int = 4096) -> Profile:
    """
    u'' = m/u^2 with u(0) = 2m, u'(0) = 0.

    The series u = 2m + s^2/(8m) - s^4/(384 m^3) covers [0, m/100]; an
    8th-order Runge-Kutta integration takes over from there.
    """
    if not m > 0:
        raise InputError("Schwarzschild mass must be positive", {"m": m})
    if not s_max > 0:
        raise InputError("s_max must be positive", {"s_max": s_max})

    near = min(s_max, 4.0 * m)
    n_near = int(min(max(2049, samples_per_unit * near), 65537))
    s = np.linspace(0.0, near, n_near)
    if s_max > near:
        s = np.concatenate([s, np.geomspace(near, s_max, 2049)[1:]])

    s_star = m / 100.0
    series = s <= s_star
    u = np.empty_like(s)
    du = np.empty_like(s)
    ss = s[series]
    u[series] = 2.0 * m + ss ** 2 / (8.0 * m) - ss ** 4 / (384.0 * m ** 3)
    du[series] = ss / (4.0 * m) - ss ** 3 / (96.0 * m ** 3)

    u_star = 2.0 * m + s_star ** 2 / (8.0 * m) - s_star ** 4 / (384.0 * m ** 3)
    du_star = s_star / (4.0 * m) - s_star ** 3 / (96.0 * m ** 3)
    rest = ~series
    if np.any(rest):
        sol = solve_ivp(
            lambda _, y: [y[1], m / y[0] ** 2],
            (s_star, s[-1]),
            [u_star, du_star],
            method="DOP853",
            t_eval=s[rest],
            rtol=1e-13,
            atol=1e-14 * m,
        )
        if not sol.success:
            logger.error(f"Schwarzschild integration failed: {sol.message}")
            raise NumericalError("Schwarzschild ODE integration failed", {"reason": sol.message})
        u[rest], du[rest] = sol.y

    return Profile(
        s, u, du, m / u ** 2,
        kind="schwarzschild",
        params={"m": m},
        evaluator=schwarzschild_exact(m),
    )


# ----------------------------------------------------------------------
# bending
# ----------------------------------------------------------------------


class BentSchwarzschild:
    """
    s -> u_m(sigma(s)) with sigma(s0) = s0, sigma' = theta and
    theta(s) = 1 + amplitude * exp(-scale^2 / (s - s0)^2) below s0, 1 above.
    """

    def __init__(self, m: float, s0: float, amplitude: float, scale: float):
        self.m = m
        self.s0 = s0
        self.amplitude = amplitude
        self.scale = scale
        self._schwarzschild = schwarzschild_exact(m)

    def excess(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """theta - 1 and theta'"""
        s = np.asarray(s, dtype=float)
        below = s < self.s0
        x = np.where(below, s - self.s0, -1.0)
        with np.errstate(over="ignore", under="ignore"):
            e = np.where(below, self.amplitude * np.exp(-self.scale ** 2 / x ** 2), 0.0)
            de = np.where(below, e * 2.0 * self.scale ** 2 / x ** 3, 0.0)
        return e, de

    def sigma(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        lo = np.minimum(s, self.s0)
        half = 0.5 * (self.s0 - lo)
        r = lo[..., None] + half[..., None] * (_GL_NODES + 1.0)
        e, _ = self.excess(r)
        return s - half * np.sum(_GL_WEIGHTS * e, axis=-1)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        e, de = self.excess(s)
        u, du, ddu = self._schwarzschild(self.sigma(s))
        theta = 1.0 + e
        return u, du * theta, ddu * theta ** 2 + du * de

    def margin(self, s) -> np.ndarray:
        """(1 - theta^2) / (2u) - u' theta' with 1 - theta^2 formed from theta - 1"""
        e, de = self.excess(s)
        u, du, _ = self._schwarzschild(self.sigma(s))
        return -e * (2.0 + e) / (2.0 * u) - du * de


def bend(
    m: float,
    s0: float,
    delta: float,
    amplitude: float = 1.0,
    scale: Optional[float] = 1.0,
    n_samples: int = 4097,
) -> Profile:
    """
    Bent Schwarzschild profile on [s0 - delta, s0 + delta].

    Scalar curvature must be strictly positive wherever theta - 1 is
    representable below s0; otherwise delta is halved. ``scale=None``
    ties the bump width to delta.
    """
    if not m > 0:
        raise InputError("Schwarzschild mass must be positive", {"m": m})
    if not (0 < delta < s0):
        raise InputError("bend needs 0 < delta < s0", {"s0": s0, "delta": delta})
    if not amplitude > 0:
        raise InputError("bend amplitude must be positive", {"amplitude": amplitude})

    for attempt in range(settings.bend_max_halvings + 1):
        width = delta if scale is None else scale
        bent = BentSchwarzschild(m, s0, amplitude, width)
        s = np.linspace(s0 - delta, s0 + delta, n_samples)
        f, df, ddf = bent(s)
        margin = bent.margin(s)
        e, _ = bent.excess(s)
        active = e > 0
        if np.all(margin[active] > 0):
            logger.info(f"Bend accepted: m={m}, s0={s0:.6g}, delta={delta:.6g}, halvings={attempt}")
            return Profile(
                s, f, df, ddf,
                kind="bent",
                params={"m": m, "s0": s0, "delta": delta, "amplitude": amplitude, "scale": width},
                evaluator=bent,
                exact_margin=margin,
            )
        logger.debug(f"Bend positivity failed at delta={delta:.6g}; halving")
        delta *= 0.5

    logger.error(f"Bend delta search exhausted for m={m}, s0={s0}")
    raise NumericalError("bend: delta reduction exhausted", {"m": m, "s0": s0, "delta": delta})


# ----------------------------------------------------------------------
# collar tail and epsilon matching
# ----------------------------------------------------------------------


def _collar_tail_evaluator(eps: float, T: float, rho: float) -> Evaluator:
    def evaluate(s):
        s = np.asarray(s, dtype=float)
        q = 1.0 + eps * s ** 2 / T ** 2
        return (
            rho * np.sqrt(q),
            rho * eps * s / (T ** 2 * np.sqrt(q)),
            rho * eps / (T ** 2 * q ** 1.5),
        )

    return evaluate


def collar_tail(eps: float, T: float, rho: float, n_samples: int = 4097) -> Profile:
    """f(s) = rho sqrt(1 + eps s^2 / T^2) on [T/2, T]"""
    if not (eps > 0 and T > 0 and rho > 0):
        raise InputError("collar tail needs eps, T, rho > 0", {"eps": eps, "T": T, "rho": rho})
    evaluator = _collar_tail_evaluator(eps, T, rho)
    s = np.linspace(0.5 * T, T, n_samples)
    f, df, ddf = evaluator(s)
    return Profile(s, f, df, ddf, kind="collar_tail", params={"eps": eps, "T": T, "rho": rho}, evaluator=evaluator)


def tail_slope(eps: float, T: float, rho: float) -> float:
    """f'(T) = rho eps / (T sqrt(1 + eps)); increasing in eps"""
    return rho * eps / (T * math.sqrt(1.0 + eps))


def required_epsilon(target_slope: float, T: float, rho: float) -> float:
    """Closed-form inverse of tail_slope"""
    k = target_slope * T / rho
    return 0.5 * (k * k + math.sqrt(k ** 4 + 4.0 * k * k))


def match_epsilon(target_slope: float, T: float, rho: float, eps0: float) -> float:
    """The unique eps in (0, eps0] with f_eps'(T) = target_slope"""
    if not target_slope > 0:
        raise InputError("target slope must be positive", {"target_slope": target_slope})
    reachable = tail_slope(eps0, T, rho)
    if target_slope > reachable:
        needed = required_epsilon(target_slope, T, rho)
        logger.warning(f"Matching infeasible: need eps={needed:.6g} > eps0={eps0:.6g}")
        raise InputError(
            MESSAGES["matching_infeasible"],
            {"target_slope": target_slope, "max_slope": reachable, "required_epsilon": needed, "eps0": eps0},
        )
    if target_slope == reachable:
        return eps0
    return brentq(lambda e: tail_slope(e, T, rho) - target_slope, 0.0, eps0, xtol=1e-14, rtol=1e-15, maxiter=500)


# ----------------------------------------------------------------------
# gluing
# ----------------------------------------------------------------------


def _smooth_step(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """C-infinity step from 0 (x <= 0) to 1 (x >= 1) with two derivatives"""
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xi = np.where(inside, x, 0.5)
    q = 1.0 / xi - 1.0 / (1.0 - xi)
    psi = expit(-q)
    k = 1.0 / xi ** 2 + 1.0 / (1.0 - xi) ** 2
    dk = -2.0 / xi ** 3 + 2.0 / (1.0 - xi) ** 3
    dpsi = psi * (1.0 - psi) * k
    ddpsi = (1.0 - 2.0 * psi) * dpsi * k + psi * (1.0 - psi) * dk
    value = np.where(inside, psi, np.where(x >= 1, 1.0, 0.0))
    return value, np.where(inside, dpsi, 0.0), np.where(inside, ddpsi, 0.0)


_BUMP_MASS = quad(lambda z: math.exp(-1.0 / (1.0 - z * z)), -1.0, 1.0, epsabs=1e-15)[0]


def _mollifier(y: np.ndarray, eta: float) -> np.ndarray:
    z = y / eta
    inside = np.abs(z) < 1
    zi = np.where(inside, z, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - zi * zi)), 0.0) / (_BUMP_MASS * eta)


class GlueMap:
    """
    G = F + chi (F * rho_eta - F) for the C^{1,1} profile F made of f1, a
    linear bridge and the translated f2. chi rises on the protected edge of
    f1 and falls inside the first quarter of f2.
    """

    def __init__(self, f1: Profile, f2: Profile, shift: float, eta: float):
        self.f1 = f1
        self.f2 = f2
        self.shift = shift
        self.eta = eta
        self.b1 = f1.b
        self.bridge_end = f2.a + shift
        self.slope = float(f1.df[-1])
        self.value_b1 = float(f1.f[-1])
        self.kinks = [self.b1] if self.bridge_end - self.b1 <= 0 else [self.b1, self.bridge_end]
        self.rise = (0.5 * (f1.a + f1.b), self.b1 - eta)
        self.fall = (self.bridge_end + eta, self.bridge_end + 0.25 * (f2.b - f2.a))

    @property
    def support(self) -> Tuple[float, float]:
        return self.rise[0], self.fall[1]

    def piecewise(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        s = np.asarray(s, dtype=float)
        F, dF, ddF = (np.empty_like(s) for _ in range(3))
        left = s <= self.b1
        right = s >= self.bridge_end
        middle = ~(left | right)
        for mask, profile, offset in ((left, self.f1, 0.0), (right, self.f2, self.shift)):
            if np.any(mask):
                F[mask], dF[mask], ddF[mask] = profile.at(s[mask] - offset)
        F[middle] = self.value_b1 + self.slope * (s[middle] - self.b1)
        dF[middle] = self.slope
        ddF[middle] = 0.0
        return F, dF, ddF

    def cutoff(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        r0, r1 = self.rise
        f0, f1 = self.fall
        up, dup, ddup = _smooth_step((s - r0) / (r1 - r0))
        down, ddown, dddown = _smooth_step((s - f0) / (f1 - f0))
        chi = up * (1.0 - down)
        dchi = dup / (r1 - r0) * (1.0 - down) - up * ddown / (f1 - f0)
        ddchi = (
            ddup / (r1 - r0) ** 2 * (1.0 - down)
            - 2.0 * dup * ddown / ((r1 - r0) * (f1 - f0))
            - up * dddown / (f1 - f0) ** 2
        )
        return chi, dchi, ddchi

    def mollified(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(F, F', F'') convolved with rho_eta; quadrature panels split at the kinks"""
        s = np.asarray(s, dtype=float)
        eta = self.eta
        cuts = [np.full_like(s, -eta)]
        cuts += [np.clip(s - k, -eta, eta) for k in self.kinks]
        cuts.append(np.full_like(s, eta))
        cuts = np.sort(np.stack(cuts, axis=1), axis=1)

        out = [np.zeros_like(s) for _ in range(3)]
        for lo, hi in zip(cuts[:, :-1].T, cuts[:, 1:].T):
            half = 0.5 * (hi - lo)
            y = lo[:, None] + half[:, None] * (_CONV_NODES + 1.0)
            weight = half[:, None] * _CONV_WEIGHTS * _mollifier(y, eta)
            pieces = self.piecewise((s[:, None] - y).ravel())
            for k in range(3):
                out[k] += np.sum(weight * pieces[k].reshape(y.shape), axis=1)
        return tuple(out)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        F, dF, ddF = self.piecewise(s)
        lo, hi = self.support
        zone = (s > lo) & (s < hi)
        if np.any(zone):
            sz = s[zone]
            chunks = [self.mollified(c) for c in np.array_split(sz, max(1, sz.size // 256))]
            M, dM, ddM = (np.concatenate([c[k] for c in chunks]) for k in range(3))
            chi, dchi, ddchi = self.cutoff(sz)
            D, dD, ddD = M - F[zone], dM - dF[zone], ddM - ddF[zone]
            F[zone] = F[zone] + chi * D
            dF[zone] = dF[zone] + dchi * D + chi * dD
            ddF[zone] = ddF[zone] + ddchi * D + 2.0 * dchi * dD + chi * ddD
        return F, dF, ddF


def translation_gap(value_b1: float, value_a2: float, slope: float) -> float:
    """Bridge length (f2(a2) - f1(b1)) / f1'(b1)"""
    return (value_a2 - value_b1) / slope


def _check_glue_inputs(f1: Profile, f2: Profile) -> None:
    for name, p in (("f1", f1), ("f2", f2)):
        if np.any(p.f <= 0) or np.any(p.df <= 0) or np.any(p.ddf <= 0):
            raise InputError(f"glue needs f, f', f'' > 0 on {name}", {"profile": name, "kind": p.kind})
        if np.min(psc_margin(p)) < -1e-9:
            raise InputError(f"glue needs nonnegative scalar curvature on {name}", {"profile": name})
    slope1, slope2 = float(f1.df[-1]), float(f2.df[0])
    if abs(slope1 - slope2) > 1e-9 * max(1.0, abs(slope1)):
        raise InputError("glue: endpoint slopes differ", {"f1_slope": slope1, "f2_slope": slope2})
    if f1.f[-1] > f2.f[0] + 1e-12 * max(1.0, abs(f2.f[0])):
        raise InputError(
            "glue: need f1(b1) < f2(a2)", {"f1_end": float(f1.f[-1]), "f2_start": float(f2.f[0])}
        )


def glue(f1: Profile, f2: Profile, eta: Optional[float] = None) -> Profile:
    """
    Translate f2 so that the tangent line of f1 at b1 reaches f2(a2), bridge
    linearly, then mollify the kinks. The mollifier width starts at
    (b1 - a1)/8 and is halved until the smoothed zone has positive psc
    margin with f, f' > 0. Samples on the protected halves are copied.
    """
    _check_glue_inputs(f1, f2)
    slope = float(f1.df[-1])
    value_b1, value_a2 = float(f1.f[-1]), float(f2.f[0])

    if abs(value_a2 - value_b1) <= 1e-12 * max(1.0, abs(value_a2)) and abs(f1.ddf[-1] - f2.ddf[0]) <= 1e-8 * max(
        1.0, abs(f2.ddf[0])
    ):
        # C^2 junction: nothing to smooth
        shift = f1.b - f2.a
        tail = f2.shifted(shift)
        keep = tail.s > f1.b
        s = np.concatenate([f1.s, tail.s[keep]])
        margin = np.concatenate([psc_margin(f1), psc_margin(tail)[keep]])
        return Profile(
            s,
            np.concatenate([f1.f, tail.f[keep]]),
            np.concatenate([f1.df, tail.df[keep]]),
            np.concatenate([f1.ddf, tail.ddf[keep]]),
            kind="glued",
            params={"gap": 0.0, "shift": shift, "eta": 0.0, "a1": f1.a, "b1": f1.b},
            evaluator=GlueMap(f1, f2, shift, 0.0).piecewise,
            exact_margin=margin,
        )

    gap = translation_gap(value_b1, value_a2, slope)
    shift = f1.b + gap - f2.a
    eta = eta or min(f1.b - f1.a, f2.b - f2.a) / 8.0
    h1 = float(np.min(np.diff(f1.s)))

    for attempt in range(settings.glue_max_halvings + 1):
        glue_map = GlueMap(f1, f2, shift, eta)
        lo, hi = glue_map.support

        left = f1.s <= lo
        right = f2.s + shift >= hi
        n_bridge = int(min(max(gap / h1, 2), 20001))
        dense = [f1.s[(f1.s > lo)], np.linspace(f1.b, glue_map.bridge_end, n_bridge)[1:-1], f2.s[~right] + shift]
        for k in glue_map.kinks:
            dense.append(np.linspace(k - eta, k + eta, 65))
        zone_s = np.unique(np.concatenate(dense))
        zone_s = zone_s[(zone_s > lo) & (zone_s < hi)]

        G, dG, ddG = glue_map(zone_s)
        zone_margin = (1.0 - dG ** 2) / (2.0 * G) - ddG
        if np.all(G > 0) and np.all(dG > 0) and np.all(zone_margin > 0):
            tail = f2.shifted(shift)
            s = np.concatenate([f1.s[left], zone_s, tail.s[right]])
            margin = np.concatenate([psc_margin(f1)[left], zone_margin, psc_margin(tail)[right]])
            logger.info(f"Glue accepted: gap={gap:.6g}, eta={eta:.3g}, halvings={attempt}")
            return Profile(
                s,
                np.concatenate([f1.f[left], G, tail.f[right]]),
                np.concatenate([f1.df[left], dG, tail.df[right]]),
                np.concatenate([f1.ddf[left], ddG, tail.ddf[right]]),
                kind="glued",
                params={"gap": gap, "shift": shift, "eta": eta, "a1": f1.a, "b1": f1.b},
                evaluator=glue_map,
                exact_margin=margin,
            )
        logger.debug(f"Glue positivity failed at eta={eta:.3g} (min margin {float(np.min(zone_margin)):.3g})")
        eta *= 0.5

    logger.error("Glue mollification width underflow")
    raise NumericalError("glue: mollification width underflow", {"gap": gap, "eta": eta})
