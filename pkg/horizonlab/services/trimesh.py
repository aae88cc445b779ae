"""Triangle meshes with intrinsic edge lengths and the linear-element stability operator"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from horizonlab.core.errors import InputError, NumericalError
from horizonlab.models.requests import MeshFile
from horizonlab.utils.logger import log_eigen_metrics, log_execution_time, setup_logger

logger = setup_logger(__name__)


@dataclass
class MeshEigenPair:
    """First eigenpair of the FEM stability operator; u holds vertex values"""

    lambda_: float
    u: np.ndarray = field(repr=False)
    gap: float
    residual: float


class TriMeshSurface:
    """
    Closed triangulated surface.

    Geometry is intrinsic: ``face_lengths[f, i]`` is the length of the edge
    of face ``f`` opposite its ``i``-th vertex. When not given, lengths are
    the Euclidean distances between vertex positions. Positions are kept for
    sweepouts and export; for chart-realized surfaces they need not be
    isometric to the lengths.
    """

    def __init__(
        self,
        vertices: np.ndarray,
        faces: np.ndarray,
        face_lengths: Optional[np.ndarray] = None,
    ):
        self.vertices = np.asarray(vertices, dtype=float)
        self.faces = np.asarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise InputError("vertices must have shape (n, 3)", {"shape": list(self.vertices.shape)})
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise InputError("faces must have shape (f, 3)", {"shape": list(self.faces.shape)})

        if face_lengths is None:
            p = self.vertices[self.faces]
            face_lengths = np.stack(
                [
                    np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
                    np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
                    np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
                ],
                axis=1,
            )
        self.face_lengths = np.asarray(face_lengths, dtype=float)
        self._validate()

    def _validate(self) -> None:
        edges = np.sort(self.edges_per_face().reshape(-1, 2), axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        if np.any(counts != 2):
            raise InputError(
                "mesh is not closed: every edge must border exactly two faces",
                {"boundary_or_nonmanifold_edges": int(np.sum(counts != 2))},
            )
        areas = self.face_areas
        scale = float(np.mean(self.face_lengths)) ** 2
        if np.any(~np.isfinite(areas)) or np.any(areas <= 1e-14 * scale):
            bad = int(np.sum(~(areas > 1e-14 * scale)))
            raise InputError("mesh has degenerate triangles", {"degenerate_faces": bad})

    @classmethod
    def from_file(cls, record: MeshFile) -> "TriMeshSurface":
        return cls(np.array(record.vertices), np.array(record.faces))

    def to_record(self) -> MeshFile:
        return MeshFile(vertices=self.vertices.tolist(), faces=self.faces.tolist())

    def scaled(self, factor: float) -> "TriMeshSurface":
        return TriMeshSurface(self.vertices * factor, self.faces, self.face_lengths * factor)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def edges_per_face(self) -> np.ndarray:
        """Vertex pairs (f, 3, 2); edge i is opposite vertex i"""
        f = self.faces
        return np.stack([f[:, [1, 2]], f[:, [2, 0]], f[:, [0, 1]]], axis=1)

    @cached_property
    def edge_index(self) -> Tuple[np.ndarray, np.ndarray]:
        """Unique edges (e, 2) with sorted endpoints, and the edge id per face slot (f, 3)"""
        pairs = np.sort(self.edges_per_face().reshape(-1, 2), axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)

    @cached_property
    def edge_faces(self) -> np.ndarray:
        """The two faces of every edge, (e, 2)"""
        order = np.argsort(self.edge_index[1].ravel(), kind="stable")
        return (order // 3).reshape(-1, 2)

    # ------------------------------------------------------------------
    # intrinsic geometry
    # ------------------------------------------------------------------

    @cached_property
    def face_areas(self) -> np.ndarray:
        a, b, c = self.face_lengths.T
        s = 0.5 * (a + b + c)
        return np.sqrt(np.maximum(s * (s - a) * (s - b) * (s - c), 0.0))

    @cached_property
    def cotangents(self) -> np.ndarray:
        """cot of the interior angle at each face corner"""
        l2 = self.face_lengths ** 2
        cots = np.empty_like(l2)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            cots[:, i] = (l2[:, j] + l2[:, k] - l2[:, i]) / (4.0 * self.face_areas)
        return cots

    @cached_property
    def angles(self) -> np.ndarray:
        return np.arctan2(1.0, self.cotangents) % math.pi

    @cached_property
    def vertex_areas(self) -> np.ndarray:
        """Lumped mass: one third of each incident face"""
        return np.bincount(self.faces.ravel(), weights=np.repeat(self.face_areas / 3.0, 3), minlength=self.n_vertices)

    @cached_property
    def angle_defects(self) -> np.ndarray:
        angle_sums = np.bincount(self.faces.ravel(), weights=self.angles.ravel(), minlength=self.n_vertices)
        return 2.0 * math.pi - angle_sums

    @property
    def gauss_curvature(self) -> np.ndarray:
        return self.angle_defects / self.vertex_areas

    @property
    def area(self) -> float:
        return float(np.sum(self.face_areas))

    @property
    def total_curvature(self) -> float:
        return float(np.sum(self.angle_defects))

    @property
    def euler_characteristic(self) -> int:
        n_edges = self.faces.shape[0] * 3 // 2
        return self.n_vertices - n_edges + self.faces.shape[0]

    def stiffness(self) -> sparse.csr_matrix:
        """Cotangent Laplacian, positive semidefinite"""
        rows, cols, vals = [], [], []
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            w = 0.5 * self.cotangents[:, i]
            vj, vk = self.faces[:, j], self.faces[:, k]
            rows += [vj, vk, vj, vk]
            cols += [vk, vj, vj, vk]
            vals += [-w, -w, w, w]
        n = self.n_vertices
        return sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        ).tocsr()

    def face_layout(self) -> np.ndarray:
        """Planar isometric copy of every face, shape (f, 3, 2)"""
        l0, l1, l2 = self.face_lengths.T
        x = (l1 ** 2 + l2 ** 2 - l0 ** 2) / (2.0 * l2)
        y = np.sqrt(np.maximum(l1 ** 2 - x ** 2, 0.0))
        layout = np.zeros((self.faces.shape[0], 3, 2))
        layout[:, 1, 0] = l2
        layout[:, 2, 0] = x
        layout[:, 2, 1] = y
        return layout

    def summary(self) -> Dict[str, float]:
        return {
            "vertices": self.n_vertices,
            "faces": int(self.faces.shape[0]),
            "area": self.area,
            "total_curvature": self.total_curvature,
            "min_angle_defect": float(np.min(self.angle_defects)),
        }


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> TriMeshSurface:
    """Subdivided icosahedron projected onto the sphere of the given radius"""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    vertices = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]

    for _ in range(subdivisions):
        midpoint: Dict[Tuple[int, int], int] = {}

        def mid(a: int, b: int) -> int:
            key = (min(a, b), max(a, b))
            if key not in midpoint:
                p = vertices[a] + vertices[b]
                vertices.append(p / np.linalg.norm(p))
                midpoint[key] = len(vertices) - 1
            return midpoint[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined

    return TriMeshSurface(radius * np.array(vertices), np.array(faces))


def flat_torus(omega1: complex, omega2: complex, n: int) -> TriMeshSurface:
    """
    Flat torus C / (omega1 Z + omega2 Z) on an n x n grid. Positions lie on
    a torus of revolution for sweepouts; lengths are the flat ones.
    """
    if n < 3:
        raise InputError("flat torus grid needs n >= 3", {"n": n})
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    u, v = 2.0 * math.pi * i.ravel() / n, 2.0 * math.pi * j.ravel() / n
    vertices = np.stack([(2.0 + np.cos(v)) * np.cos(u), (2.0 + np.cos(v)) * np.sin(u), np.sin(v)], axis=1)

    def vid(a, b):
        return (a % n) * n + (b % n)

    i, j = i.ravel(), j.ravel()
    v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
    faces = np.concatenate([np.stack([v00, v10, v01], axis=1), np.stack([v10, v11, v01], axis=1)])
    # edge i is opposite vertex i
    diagonal, side1, side2 = abs(omega2 - omega1) / n, abs(omega1) / n, abs(omega2) / n
    lengths = np.concatenate([
        np.tile([diagonal, side2, side1], (n * n, 1)),
        np.tile([side1, diagonal, side2], (n * n, 1)),
    ])
    return TriMeshSurface(vertices, faces, lengths)


@log_execution_time(logger)
def mesh_first_eigenpair(mesh: TriMeshSurface) -> MeshEigenPair:
    """
    Smallest eigenpair of (S + diag(angle defect)) u = lambda M u.

    S is the cotangent stiffness and M the lumped vertex-area mass, so the
    potential is K_g lumped at vertices with the Gauss-Bonnet exact
    curvature. Shift-invert below min K, which bounds lambda from below.
    The first eigenfunction of a sphere is strictly positive; anything else
    is a numerical failure.
    """
    if mesh.euler_characteristic != 2:
        raise InputError(
            "stability operator needs a sphere mesh",
            {"euler_characteristic": mesh.euler_characteristic},
        )
    S = mesh.stiffness()
    V = sparse.diags(mesh.angle_defects)
    M = sparse.diags(mesh.vertex_areas)
    A = (S + V).tocsc()
    sigma = float(np.min(mesh.gauss_curvature)) - 4.0 * math.pi / mesh.area

    try:
        values, vectors = eigsh(A, k=2, M=M.tocsc(), sigma=sigma, which="LM")
    except (ArpackNoConvergence, RuntimeError) as e:
        logger.error(f"FEM eigen solve failed: {str(e)}")
        raise NumericalError("FEM eigen solver did not converge", {"vertices": mesh.n_vertices, "reason": str(e)})

    order = np.argsort(values)
    values, vectors = values[order], vectors[:, order]
    lam = float(values[0])
    u = vectors[:, 0]
    if np.sum(mesh.vertex_areas * u) < 0:
        u = -u
    u = u / math.sqrt(float(np.sum(mesh.vertex_areas * u * u)))
    if np.min(u) <= 0.0:
        raise NumericalError(
            "first FEM eigenvector changes sign",
            {"min_u": float(np.min(u)), "max_u": float(np.max(u)), "lambda": lam},
        )

    residual = float(np.max(np.abs(A @ u - lam * (M @ u)) / mesh.vertex_areas))
    gap = float(values[1] - values[0])
    log_eigen_metrics(logger, "fem", mesh.n_vertices, lam, gap, residual)
    return MeshEigenPair(lambda_=lam, u=u, gap=gap, residual=residual)
