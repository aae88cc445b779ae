"""Tests for triangle meshes, the FEM stability operator and sweepouts"""

import math

import numpy as np
import pytest

from horizonlab.core.errors import InputError, NumericalError
from horizonlab.services.hoop_systole import ConeSurface, lattice_systole
from horizonlab.services.sweepout import (
    folds_back,
    level_length,
    level_loops,
    mesh_geodesic_search,
    shorten_loop,
    steiner_graph,
    widest_level,
)
from horizonlab.services.trimesh import TriMeshSurface, flat_torus, icosphere, mesh_first_eigenpair


@pytest.fixture(scope="module")
def sphere():
    return icosphere(subdivisions=3)


# ------------------------------------------------------------------------------#
# geometry
# ------------------------------------------------------------------------------#


def test_icosphere_topology(sphere):
    assert sphere.euler_characteristic == 2
    assert sphere.n_vertices == 642
    assert sphere.faces.shape == (1280, 3)


def test_discrete_gauss_bonnet(sphere):
    """Angle defects sum to 4 pi on any closed sphere mesh"""
    assert abs(sphere.total_curvature - 4.0 * math.pi) <= 1e-10
    assert abs(sphere.area - 4.0 * math.pi) <= 0.02 * 4.0 * math.pi


def test_scaled(sphere):
    big = sphere.scaled(2.0)
    assert big.area == pytest.approx(4.0 * sphere.area, rel=1e-12)
    assert big.total_curvature == pytest.approx(sphere.total_curvature, rel=1e-12)


def test_face_layout_is_isometric(sphere):
    layout = sphere.face_layout()
    for i, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
        lengths = np.linalg.norm(layout[:, a] - layout[:, b], axis=1)
        np.testing.assert_allclose(lengths, sphere.face_lengths[:, i], rtol=1e-10)


def test_record_round_trip(sphere):
    back = TriMeshSurface.from_file(sphere.to_record())
    np.testing.assert_array_equal(back.faces, sphere.faces)
    assert back.area == pytest.approx(sphere.area, rel=1e-12)


def test_open_mesh_rejected(sphere):
    with pytest.raises(InputError):
        TriMeshSurface(sphere.vertices, sphere.faces[1:])


def test_bad_vertex_shape_rejected(sphere):
    with pytest.raises(InputError):
        TriMeshSurface(sphere.vertices[:, :2], sphere.faces)


def test_degenerate_triangles_rejected():
    vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    faces = np.array([[0, 1, 2], [0, 3, 1], [1, 3, 2], [2, 3, 0]])
    with pytest.raises(InputError):
        TriMeshSurface(vertices, faces)


# ------------------------------------------------------------------------------#
# FEM stability operator
# ------------------------------------------------------------------------------#


def test_fem_round_sphere(sphere):
    """lambda_1(-Delta + K) is close to 1 on the unit sphere mesh"""
    pair = mesh_first_eigenpair(sphere)
    assert abs(pair.lambda_ - 1.0) <= 0.05, f"lambda_1 = {pair.lambda_}"
    assert pair.gap > 1.0, f"gap {pair.gap}"
    assert np.all(pair.u > 0), "ground state must be positive"
    assert pair.residual <= 1e-5


def test_fem_scaling(sphere):
    """Scaling lengths by c scales lambda by 1/c^2"""
    base = mesh_first_eigenpair(sphere).lambda_
    scaled = mesh_first_eigenpair(sphere.scaled(2.0)).lambda_
    assert scaled == pytest.approx(base / 4.0, rel=1e-8)


def test_fem_needs_sphere():
    cone = ConeSurface()
    with pytest.raises(InputError):
        mesh_first_eigenpair(flat_torus(cone.omega1, cone.omega2, 6))


def test_fem_rejects_sign_changing_ground_state(sphere, monkeypatch):
    def fake_eigsh(A, k, M, sigma, which):
        u = np.ones(A.shape[0])
        u[0] = -0.5
        return np.array([1.0, 3.0]), np.stack([u, np.ones(A.shape[0])], axis=1)

    monkeypatch.setattr("horizonlab.services.trimesh.eigsh", fake_eigsh)
    with pytest.raises(NumericalError):
        mesh_first_eigenpair(sphere)


# ------------------------------------------------------------------------------#
# sweepouts
# ------------------------------------------------------------------------------#


def test_equator_length(sphere):
    heights = sphere.vertices[:, 2]
    length = level_length(sphere, heights, 1e-3)
    assert abs(length - 2.0 * math.pi) <= 0.02 * 2.0 * math.pi, f"equator length {length}"
    assert level_length(sphere, heights, 2.0) == 0.0


def test_widest_level_round(sphere):
    """The widest level of a linear sweepout is near the equator"""
    level = widest_level(sphere, sphere.vertices[:, 2])
    assert abs(level) <= 0.05, f"widest level {level}"


def test_edge_index(sphere):
    edges, face_edges = sphere.edge_index
    assert edges.shape == (1920, 2)
    assert np.all(edges[:, 0] < edges[:, 1])
    np.testing.assert_array_equal(np.sort(edges[face_edges], axis=2), np.sort(sphere.edges_per_face(), axis=2))
    for f in sphere.edge_faces[:50]:
        assert f[0] != f[1]


def test_steiner_graph_weights(sphere):
    """Vertex-to-vertex weights are the edge lengths; points on an edge split it evenly"""
    graph = steiner_graph(sphere, m=3)
    edges, face_edges = sphere.edge_index
    assert graph.shape == (642 + 3 * 1920,) * 2
    assert abs(graph - graph.T).max() == 0.0
    a, b = sphere.faces[0, 1], sphere.faces[0, 2]
    assert graph[a, b] == pytest.approx(sphere.face_lengths[0, 0], rel=1e-12)
    e = face_edges[0, 0]
    first = 642 + 3 * e
    assert graph[edges[e, 0], first] == pytest.approx(0.25 * sphere.face_lengths[0, 0], rel=1e-10)


def test_level_loops_round(sphere):
    """The equator is one closed loop of length close to 2 pi"""
    heights = sphere.vertices[:, 2]
    loops = level_loops(sphere, heights, 1e-3)
    assert len(loops) == 1
    graph = steiner_graph(sphere)
    length = float(np.sum(np.asarray(graph[loops[0], np.roll(loops[0], -1)]).ravel()))
    assert abs(length - 2.0 * math.pi) <= 0.03 * 2.0 * math.pi, f"snapped equator {length}"


def test_shorten_collapses_small_loop(sphere):
    """A loop around a vertex is not a geodesic and collapses"""
    graph = steiner_graph(sphere)
    heights = sphere.vertices @ sphere.vertices[0]
    loop = level_loops(sphere, heights, 0.99)[0]
    assert loop.size >= 3
    shortened, _, _ = shorten_loop(graph, loop, window=1.0)
    assert shortened.size < 3 or folds_back(shortened, graph.shape[0])


def test_folds_back():
    assert folds_back(np.array([4, 7, 9, 7]), 10)
    assert not folds_back(np.array([4, 7, 9]), 10)


def test_geodesic_search_round(sphere):
    """Closed geodesics of the unit sphere are great circles"""
    loop = mesh_geodesic_search(sphere, n_sweeps=6, rng=np.random.default_rng(5))
    assert abs(loop.length - 2.0 * math.pi) <= 0.03 * 2.0 * math.pi, f"loop length {loop.length}"
    assert abs(np.linalg.norm(loop.direction) - 1.0) <= 1e-12
    assert loop.nodes.size >= 3 and loop.passes >= 1


def test_geodesic_search_flat_torus():
    """On the hexagonal flat torus the search finds the lattice systole"""
    cone = ConeSurface()
    torus = flat_torus(cone.omega1, cone.omega2, 18)
    assert torus.euler_characteristic == 0
    assert abs(torus.total_curvature) <= 1e-10
    loop = mesh_geodesic_search(torus, n_sweeps=8, rng=np.random.default_rng(11))
    systole = lattice_systole()
    assert abs(loop.length - systole) <= 0.02 * systole, f"loop length {loop.length} vs {systole}"


def test_geodesic_search_needs_sweeps(sphere):
    with pytest.raises(InputError):
        mesh_geodesic_search(sphere, n_sweeps=0)
