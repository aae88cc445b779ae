"""
The Croke surface: two equilateral triangles of side 2 doubled along their
boundary, i.e. the flat torus C/Lambda modulo rotation by 2 pi/3. Its three
cone points (angle 2 pi/3) are replaced by convex rotationally symmetric
caps; the result certifies that a stable horizon can be long compared with
its Hawking mass.
"""

import cmath
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.spatial import Delaunay
from scipy.special import roots_legendre

from horizonlab.core.config import settings
from horizonlab.core.constants import (
    CONE_ANGLE,
    CONE_CIRCUMFERENCE_RATIO,
    CONE_GRAPH_SLOPE,
    CROKE_AREA,
    CROKE_LATTICE_SYSTOLE,
    CROKE_SIDE,
    FOUR_PI,
    MESSAGES,
    SQRT3,
)
from horizonlab.core.errors import InputError, MembershipError
from horizonlab.models.responses import HoopReport
from horizonlab.services.trimesh import MeshEigenPair, TriMeshSurface, mesh_first_eigenpair
from horizonlab.utils.logger import log_execution_time, log_verification_metrics, setup_logger

logger = setup_logger(__name__)

_GL_NODES, _GL_WEIGHTS = roots_legendre(16)
_GL_T = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS
_SUBPIECES = 4


# ----------------------------------------------------------------------
# flat model
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConeSurface:
    """Hexagonal torus C/Lambda with the order-3 rotation and its fixed cone points"""

    omega1: complex = 2.0 * SQRT3 * cmath.exp(-1j * math.pi / 6.0)
    omega2: complex = 2.0 * SQRT3 * cmath.exp(1j * math.pi / 6.0)
    rotation: complex = cmath.exp(2j * math.pi / 3.0)
    cone_points: Tuple[complex, ...] = (0.0, 2.0, 2.0 * cmath.exp(1j * math.pi / 3.0))

    @property
    def hexagon(self) -> np.ndarray:
        return 2.0 * np.exp(1j * math.pi * np.arange(6) / 3.0)

    def lattice_coordinates(self, z: complex) -> Tuple[float, float]:
        """(a, b) with z = a omega1 + b omega2"""
        M = np.array([[self.omega1.real, self.omega2.real], [self.omega1.imag, self.omega2.imag]])
        a, b = np.linalg.solve(M, [z.real, z.imag])
        return float(a), float(b)

    def in_lattice(self, z: complex, tol: float = 1e-9) -> bool:
        a, b = self.lattice_coordinates(z)
        return abs(a - round(a)) <= tol and abs(b - round(b)) <= tol

    def rotation_preserves_lattice(self) -> bool:
        return all(self.in_lattice(self.rotation * w) for w in (self.omega1, self.omega2))

    def fixes_cone_classes(self) -> bool:
        return all(self.in_lattice(self.rotation * p - p) for p in self.cone_points)

    @property
    def torus_area(self) -> float:
        return abs((self.omega1.conjugate() * self.omega2).imag)

    @property
    def area(self) -> float:
        """The quotient by the rotation has a third of the torus area"""
        return self.torus_area / 3.0

    def cone_distances(self, radius: int = 2) -> List[float]:
        """Pairwise flat distances between cone points, minimized over lattice translates"""
        shifts = [a * self.omega1 + b * self.omega2 for a in range(-radius, radius + 1) for b in range(-radius, radius + 1)]
        out = []
        points = self.cone_points
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                out.append(min(abs(points[i] - points[j] + s) for s in shifts))
        return out

    def checks(self) -> Dict[str, bool]:
        return {
            "rotation_preserves_lattice": self.rotation_preserves_lattice(),
            "fixes_cone_classes": self.fixes_cone_classes(),
            "area": abs(self.area - CROKE_AREA) <= 1e-12,
            "cone_distances": all(abs(d - CROKE_SIDE) <= 1e-12 for d in self.cone_distances()),
        }


def build_cone_surface() -> ConeSurface:
    cone = ConeSurface()
    failed = [k for k, ok in cone.checks().items() if not ok]
    if failed:
        logger.error(f"Cone surface invariants failed: {failed}")
        raise InputError("cone surface invariants failed", {"failed": failed})
    return cone


def lattice_systole(cone: Optional[ConeSurface] = None, scale: float = 1.0, radius: int = 4) -> float:
    """Shortest nonzero lattice vector, by enumeration over |a|, |b| <= radius"""
    cone = cone or ConeSurface()
    lengths = [
        abs(a * cone.omega1 + b * cone.omega2)
        for a in range(-radius, radius + 1)
        for b in range(-radius, radius + 1)
        if (a, b) != (0, 0)
    ]
    return scale * min(lengths)


# ----------------------------------------------------------------------
# caps
# ----------------------------------------------------------------------


def _smootherstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x ** 3 * (10.0 - 15.0 * x + 6.0 * x * x)


@dataclass(frozen=True)
class CapProfile:
    """
    dr^2 + phi(r)^2 dtheta^2 replacing the cone ball of flat radius r0.

    phi' = 1 on [0, r_cap/2], falls to 1/3 by a smootherstep on
    [r_cap/2, r_cap] and stays 1/3 beyond, with r_cap = 0.4 r0 so that the
    cone radius 3 phi(r_cap) equals r0.
    """

    r0: float

    @property
    def r_cap(self) -> float:
        return 0.4 * self.r0

    @property
    def _width(self) -> float:
        return 0.5 * self.r_cap

    def _x(self, r):
        return (np.asarray(r, dtype=float) - self._width) / self._width

    def dphi(self, r) -> np.ndarray:
        return 1.0 - (1.0 - CONE_CIRCUMFERENCE_RATIO) * _smootherstep(self._x(r))

    def ddphi(self, r) -> np.ndarray:
        x = np.clip(self._x(r), 0.0, 1.0)
        return -(1.0 - CONE_CIRCUMFERENCE_RATIO) * 30.0 * x ** 2 * (x - 1.0) ** 2 / self._width

    def phi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        x = np.clip(self._x(r), 0.0, 1.0)
        ramp = x ** 6 - 3.0 * x ** 5 + 2.5 * x ** 4
        drop = 1.0 - CONE_CIRCUMFERENCE_RATIO
        return r - drop * self._width * ramp - drop * np.maximum(r - self.r_cap, 0.0)

    def curvature(self, r) -> np.ndarray:
        return -self.ddphi(r) / self.phi(r)

    def geodesic_curvature(self, r) -> np.ndarray:
        """Geodesic curvature phi'/phi of the circle of radius r"""
        return self.dphi(r) / self.phi(r)

    def total_curvature(self) -> float:
        """2 pi (1 - phi'(r_cap)), computed as the integral of K dA"""
        value, _ = quad(lambda r: -float(self.ddphi(r)), self._width, self.r_cap, epsabs=1e-14)
        return 2.0 * math.pi * value

    def cap_area(self) -> float:
        value, _ = quad(lambda r: float(self.phi(r)), 0.0, self.r_cap, epsabs=1e-16)
        return 2.0 * math.pi * value

    def cone_area(self) -> float:
        return 0.5 * CONE_ANGLE * self.r0 ** 2

    def chart_radius(self, r) -> np.ndarray:
        """Flat cone radius rho = 3 phi(r) of the circle at cap radius r"""
        return np.asarray(self.phi(r)) / CONE_CIRCUMFERENCE_RATIO

    def cap_radius_at(self, rho) -> np.ndarray:
        """Inverse of chart_radius by Newton's method (phi is concave)"""
        rho = np.asarray(rho, dtype=float)
        r = CONE_CIRCUMFERENCE_RATIO * rho
        for _ in range(60):
            step = (self.chart_radius(r) - rho) / (self.dphi(r) / CONE_CIRCUMFERENCE_RATIO)
            r = r - step
            if np.max(np.abs(step)) <= 1e-15 * max(1.0, self.r0):
                break
        return r

    def checks(self) -> Dict[str, bool]:
        r = np.linspace(0.0, self.r_cap, 2049)[1:]
        return {
            "nonnegative_curvature": bool(np.all(self.ddphi(r) <= 0.0)),
            "total_curvature": abs(self.total_curvature() - 4.0 * math.pi / 3.0) <= 1e-8,
            "convex_circles": bool(np.all(self.geodesic_curvature(r) > 0.0)),
            "matches_cone": abs(float(self.chart_radius(self.r_cap)) - self.r0) <= 1e-12 * max(1.0, self.r0),
        }


# ----------------------------------------------------------------------
# geodesics of a cap
# ----------------------------------------------------------------------


def _clairaut(cap: CapProfile, turn: np.ndarray, end: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Angle swept and length run by the geodesic with Clairaut constant
    phi(turn), from its turning radius out to ``end``. The substitution
    r = turn cosh(u) removes the square-root singularity at the turn; the
    u-range is split at the profile's knots so every piece is smooth.
    """
    turn = np.maximum(np.asarray(turn, dtype=float), 1e-300)
    ratio = np.maximum(np.asarray(end, dtype=float) / turn, 1.0)
    c = cap.phi(turn)[:, None]
    breaks = [np.zeros_like(ratio)]
    for knot in (cap._width, cap.r_cap):
        breaks.append(np.arccosh(np.clip(knot / turn, 1.0, ratio)))
    breaks.append(np.arccosh(ratio))

    angle = np.zeros_like(ratio)
    length = np.zeros_like(ratio)
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        step = (hi - lo) / _SUBPIECES
        for k in range(_SUBPIECES):
            u = (lo + k * step)[:, None] + step[:, None] * _GL_T
            r = turn[:, None] * (1.0 + 2.0 * np.sinh(0.5 * u) ** 2)
            phi = cap.phi(r)
            root = np.sqrt(np.maximum((phi - c) * (phi + c), 1e-300))
            dr = turn[:, None] * np.sinh(u) * step[:, None] * _GL_W
            angle += np.sum(dr * c / (phi * root), axis=1)
            length += np.sum(dr * phi / root, axis=1)
    return angle, length


def _geodesic_branch(cap: CapProfile, r_in: np.ndarray, r_out: np.ndarray, tau: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """tau in [0, 1] runs monotonically outward, tau in [1, 2] turns inside r_in"""
    monotone = tau <= 1.0
    turn = np.where(monotone, tau, 2.0 - tau) * r_in
    angle_in, length_in = _clairaut(cap, turn, r_in)
    angle_out, length_out = _clairaut(cap, turn, r_out)
    sign = np.where(monotone, -1.0, 1.0)
    return angle_out + sign * angle_in, length_out + sign * length_in


def cap_geodesic_lengths(cap: CapProfile, r_a, r_b, dtheta, iterations: int = 64) -> np.ndarray:
    """
    Distance between (r_a, 0) and (r_b, dtheta) in dr^2 + phi(r)^2 dtheta^2.

    The swept angle grows from 0 (meridian) through the monotone family to
    pi (through the tip) as tau goes from 0 to 2, so the geodesic is found
    by bisection on tau.
    """
    r_a = np.atleast_1d(np.asarray(r_a, dtype=float))
    r_b = np.atleast_1d(np.asarray(r_b, dtype=float))
    dtheta = np.clip(np.abs(np.atleast_1d(np.asarray(dtheta, dtype=float))), 0.0, math.pi)
    r_in, r_out = np.minimum(r_a, r_b), np.maximum(r_a, r_b)

    out = np.where(r_in <= 0.0, r_out, r_out - r_in)
    solve = (r_in > 0.0) & (dtheta > 1e-14)
    if not np.any(solve):
        return out
    r_in, r_out, target = r_in[solve], r_out[solve], dtheta[solve]
    lo, hi = np.zeros_like(target), np.full_like(target, 2.0)
    for _ in range(iterations):
        tau = 0.5 * (lo + hi)
        swept, _ = _geodesic_branch(cap, r_in, r_out, tau)
        below = swept < target
        lo = np.where(below, tau, lo)
        hi = np.where(below, hi, tau)
    _, length = _geodesic_branch(cap, r_in, r_out, 0.5 * (lo + hi))
    out[solve] = length
    return out


# ----------------------------------------------------------------------
# mesh of the smoothed surface
# ----------------------------------------------------------------------


_CORNERS = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, SQRT3]])
_CORNER_BASE = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)


@dataclass
class SmoothedCrokeSurface:
    """
    Doubled triangle with capped corners. ``chart`` holds each vertex's
    position in the flat triangle with corners 0, 2, 2 exp(i pi/3), and
    ``sheet`` is +1/-1 for the two faces and 0 on the shared boundary.
    """

    cone: ConeSurface
    cap: CapProfile
    mesh: TriMeshSurface = field(repr=False)
    chart: np.ndarray = field(repr=False)
    sheet: np.ndarray = field(repr=False)
    ring_radius: float = 0.0

    @property
    def delta_area(self) -> float:
        """Signed area change of the three caps against the cone balls they replace"""
        return 3.0 * (self.cap.cap_area() - self.cap.cone_area())

    @property
    def area_interval(self) -> Tuple[float, float]:
        """Smoothed and flat areas, ascending; the mesh area lies between them"""
        smoothed = CROKE_AREA + self.delta_area
        return min(smoothed, CROKE_AREA), max(smoothed, CROKE_AREA)

    def cap_curvatures(self) -> List[float]:
        out = []
        for corner in _CORNERS:
            near = np.linalg.norm(self.chart - corner, axis=1) <= self.ring_radius
            out.append(float(np.sum(self.mesh.angle_defects[near])))
        return out


def _corner_rings(k: int, r0: float, flat_edge: float) -> Tuple[List[np.ndarray], float]:
    corner = _CORNERS[k]
    base = _CORNER_BASE[k]
    spacing = min(r0 / 8.0, flat_edge)
    n_inner = int(math.ceil(r0 / spacing))
    radii = list(np.linspace(r0 / n_inner, r0, n_inner))
    step = r0 / n_inner
    rho = r0
    while step * 1.3 < flat_edge and rho + 1.3 * step < 0.5 * CROKE_SIDE - flat_edge:
        step *= 1.3
        rho += step
        radii.append(rho)

    # rings inside the cap share one angular grid, so each annulus is a strip of trapezoids
    n_cap = max(6, int(math.ceil(n_inner * math.pi / 3.0)))
    points = [corner[None, :]]
    previous = 0.0
    for rho in radii:
        local = rho - previous
        previous = rho
        n = n_cap if rho <= r0 * (1.0 + 1e-12) else max(2, int(math.ceil(rho * (math.pi / 3.0) / local)))
        psi = base + np.linspace(0.0, math.pi / 3.0, n + 1)
        points.append(corner + rho * np.column_stack([np.cos(psi), np.sin(psi)]))
    return points, float(radii[-1])


def _edge_distance(points: np.ndarray) -> np.ndarray:
    """Distance to the triangle boundary for points inside it"""
    x, y = points[:, 0], points[:, 1]
    d0 = y
    d1 = (SQRT3 * (2.0 - x) - y) / 2.0
    d2 = (SQRT3 * x - y) / 2.0
    return np.minimum(np.minimum(d0, d1), d2)


def _sheet_points(r0: float, flat_edge: float) -> Tuple[np.ndarray, float]:
    chunks: List[np.ndarray] = []
    ring = 0.0
    for k in range(3):
        pts, ring = _corner_rings(k, r0, flat_edge)
        chunks += pts

    for k in range(3):
        a, b = _CORNERS[k], _CORNERS[(k + 1) % 3]
        n = max(2, int(math.ceil((CROKE_SIDE - 2.0 * ring) / flat_edge)))
        t = np.linspace(ring, CROKE_SIDE - ring, n + 1)[1:-1] / CROKE_SIDE
        chunks.append(a + t[:, None] * (b - a))

    rows = int(math.ceil(SQRT3 / (flat_edge * SQRT3 / 2.0)))
    lattice = []
    for i in range(rows + 1):
        y = i * flat_edge * SQRT3 / 2.0
        offset = 0.5 * flat_edge * (i % 2)
        xs = np.arange(offset, CROKE_SIDE + flat_edge, flat_edge)
        lattice.append(np.column_stack([xs, np.full_like(xs, y)]))
    lattice = np.concatenate(lattice)
    keep = _edge_distance(lattice) > 0.5 * flat_edge
    for corner in _CORNERS:
        keep &= np.linalg.norm(lattice - corner, axis=1) > ring + 0.5 * flat_edge
    chunks.append(lattice[keep])
    return np.concatenate(chunks), ring


def _segment_distance(P: np.ndarray, Q: np.ndarray, point: np.ndarray) -> np.ndarray:
    d = Q - P
    t = np.sum((point - P) * d, axis=1) / np.maximum(np.sum(d * d, axis=1), 1e-300)
    return np.linalg.norm(P + np.clip(t, 0.0, 1.0)[:, None] * d - point, axis=1)


def _corner_polar(cap: CapProfile, k: int, points: np.ndarray, sheet: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Cap radius and cap angle about corner k; the lower sheet runs the angle backwards"""
    offset = points - _CORNERS[k]
    rho = np.hypot(offset[:, 0], offset[:, 1])
    psi = np.mod(np.arctan2(offset[:, 1], offset[:, 0]) - _CORNER_BASE[k] + math.pi, 2.0 * math.pi) - math.pi
    psi = np.clip(psi, 0.0, math.pi / 3.0)
    theta = np.where(sheet < 0, -1.0, 1.0) * psi / CONE_CIRCUMFERENCE_RATIO
    return cap.cap_radius_at(rho), theta


def _edge_lengths(cap: CapProfile, chart: np.ndarray, sheet: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """
    Geodesic length of every mesh edge, shape (f, 3). Chart chords are exact
    where they stay in the flat region; edges within 2 r0 of a corner are
    solved in the cap's rotational coordinates. With exact geodesic lengths
    on a K >= 0 surface no vertex gets a negative angle defect.
    """
    pairs = np.stack([faces[:, [1, 2]], faces[:, [2, 0]], faces[:, [0, 1]]], axis=1).reshape(-1, 2)
    edges, inverse = np.unique(np.sort(pairs, axis=1), axis=0, return_inverse=True)
    P, Q = chart[edges[:, 0]], chart[edges[:, 1]]
    lengths = np.linalg.norm(Q - P, axis=1)

    for k, corner in enumerate(_CORNERS):
        near = _segment_distance(P, Q, corner) < 2.0 * cap.r0
        if not np.any(near):
            continue
        r_a, theta_a = _corner_polar(cap, k, P[near], sheet[edges[near, 0]])
        r_b, theta_b = _corner_polar(cap, k, Q[near], sheet[edges[near, 1]])
        dtheta = np.abs(np.mod(theta_a - theta_b + math.pi, 2.0 * math.pi) - math.pi)
        lengths[near] = cap_geodesic_lengths(cap, r_a, r_b, dtheta)
        logger.debug(f"Corner {k}: {int(np.sum(near))} edges solved as cap geodesics")

    return lengths[np.asarray(inverse).reshape(-1)].reshape(-1, 3)


@log_execution_time(logger)
def smooth_caps(r0: Optional[float] = None, flat_edge: Optional[float] = None) -> SmoothedCrokeSurface:
    """Triangulate the capped doubled triangle with intrinsic edge lengths"""
    r0 = settings.cap_radius if r0 is None else r0
    flat_edge = settings.mesh_flat_edge if flat_edge is None else flat_edge
    if not 0.0 < r0 < 0.5:
        raise InputError("cap radius must satisfy 0 < r0 < 1/2", {"r0": r0})
    if not 0.0 < flat_edge <= 0.25:
        raise InputError("flat edge length must lie in (0, 0.25]", {"flat_edge": flat_edge})

    cone = build_cone_surface()
    cap = CapProfile(r0)
    points, ring = _sheet_points(r0, flat_edge)
    tri = Delaunay(points)
    faces = tri.simplices.copy()
    p = points[faces]
    signed = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    faces[signed < 0] = faces[signed < 0][:, ::-1]
    faces = faces[np.abs(signed) > 1e-12 * flat_edge ** 2]

    n = points.shape[0]
    boundary = _edge_distance(points) <= 1e-9
    mirror = np.arange(n)
    interior = np.where(~boundary)[0]
    mirror[interior] = n + np.arange(interior.size)
    all_faces = np.concatenate([faces, mirror[faces][:, ::-1]])

    chart = np.concatenate([points, points[interior]])
    sheet = np.concatenate([np.where(boundary, 0, 1), -np.ones(interior.size, dtype=int)])
    height = 0.5 * np.maximum(_edge_distance(chart), 0.0) * sheet
    vertices = np.column_stack([chart, height])

    lengths = _edge_lengths(cap, chart, sheet, all_faces)
    mesh = TriMeshSurface(vertices, all_faces, face_lengths=lengths)
    logger.info(
        "Croke mesh built",
        extra={
            "event_type": "mesh_metrics",
            "vertices": mesh.n_vertices,
            "faces": int(all_faces.shape[0]),
            "area": mesh.area,
            "min_angle_defect": float(np.min(mesh.angle_defects)),
        },
    )
    return SmoothedCrokeSurface(cone=cone, cap=cap, mesh=mesh, chart=chart, sheet=sheet, ring_radius=ring)


# ----------------------------------------------------------------------
# certified length and the hoop comparison
# ----------------------------------------------------------------------


def length_cases(r0: float) -> Dict[str, float]:
    """
    Lower bounds for a closed geodesic by where it meets the caps:
    case1 avoids them, case2 passes a single cap, case3 joins two cone points.
    """
    return {
        "case1": CROKE_LATTICE_SYSTOLE,
        "case2": CROKE_LATTICE_SYSTOLE - 2.0 * r0,
        "case3": 2.0 * CROKE_SIDE - 4.0 * r0,
    }


def geodesic_lower_bound(surface: SmoothedCrokeSurface) -> float:
    r0 = surface.cap.r0
    if not 0.0 < r0 < 2.0 - SQRT3:
        raise InputError(MESSAGES["cap_radius_range"], {"r0": r0})
    r = np.linspace(0.0, surface.cap.r_cap, 4097)[1:]
    if not np.all(surface.cap.geodesic_curvature(r) > 0.0):
        raise InputError("cap circles are not strictly convex", {"r0": r0})
    return min(length_cases(r0).values())


def hoop_ratio(length: float, surface_area: float) -> float:
    return length ** 2 / surface_area


def round_sphere_ratio(radius: float = 1.0) -> float:
    """Great-circle length squared over area; exactly pi"""
    return hoop_ratio(2.0 * math.pi * radius, FOUR_PI * radius ** 2)


def counterexample_report(
    surface: SmoothedCrokeSurface,
    mass_factor: float,
    empirical_length: Optional[float] = None,
    pair: Optional[MeshEigenPair] = None,
    seed: Optional[int] = None,
) -> HoopReport:
    start = time.time()
    if not mass_factor > 1.0:
        raise InputError("mass factor must exceed 1", {"mass_factor": mass_factor})
    mesh = surface.mesh
    pair = pair or mesh_first_eigenpair(mesh)
    if pair.lambda_ <= 0:
        logger.error(f"Croke mesh not certified in M+: lambda={pair.lambda_}")
        raise MembershipError(MESSAGES["membership_uncertified"], {"lambda": pair.lambda_})

    surface_area = mesh.area
    certified = geodesic_lower_bound(surface)
    mass = mass_factor * math.sqrt(surface_area / (4.0 * FOUR_PI))
    ratio = hoop_ratio(certified, surface_area)

    flags = {
        "ratio_exceeds_pi": ratio > math.pi,
        "hoop_violated": certified > FOUR_PI * mass,
        "gauss_bonnet": abs(mesh.total_curvature - FOUR_PI) <= 1e-6,
        "in_m_plus": pair.lambda_ > 0,
        "nonnegative_curvature": bool(np.min(mesh.angle_defects) >= -1e-8),
    }
    if empirical_length is not None:
        flags["empirical_consistent"] = empirical_length >= 0.98 * certified
    log_verification_metrics(logger, "croke", flags, time.time() - start)

    return HoopReport(
        seed=settings.seed if seed is None else seed,
        cap_radius=surface.cap.r0,
        area=surface_area,
        delta_area=surface.delta_area,
        area_interval=surface.area_interval,
        lattice_systole=lattice_systole(surface.cone),
        cone_distance=min(surface.cone.cone_distances()),
        certified_length=certified,
        length_cases=length_cases(surface.cap.r0),
        empirical_length=empirical_length,
        lambda_1=pair.lambda_,
        total_curvature=mesh.total_curvature,
        min_angle_defect=float(np.min(mesh.angle_defects)),
        cap_total_curvature=float(np.mean(surface.cap_curvatures())),
        cone_graph_slope=CONE_GRAPH_SLOPE,
        ratio=ratio,
        mass_factor=mass_factor,
        mass=mass,
        hoop_bound=FOUR_PI * mass,
        flags=flags,
        passed=all(flags.values()),
    )
