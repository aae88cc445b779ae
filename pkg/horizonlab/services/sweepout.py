"""
Empirical hoop lengths on triangle meshes: level loops of random linear
sweepouts, shortened along a Steiner refinement of the edge graph until
they stop changing.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from horizonlab.core.config import settings
from horizonlab.core.errors import InputError, NumericalError
from horizonlab.services.trimesh import TriMeshSurface
from horizonlab.utils.logger import log_execution_time, setup_logger

logger = setup_logger(__name__)

STEINER_POINTS = 3


@dataclass
class GeodesicLoop:
    """A closed edge-graph path that no window replacement shortens"""

    length: float
    nodes: np.ndarray = field(repr=False)
    direction: np.ndarray
    passes: int


def level_length(mesh: TriMeshSurface, heights: np.ndarray, level: float, layout: Optional[np.ndarray] = None) -> float:
    """
    Intrinsic length of {height = level}, measured face by face in the
    planar layout of each triangle.
    """
    layout = mesh.face_layout() if layout is None else layout
    h = heights[mesh.faces] - level
    above = h > 0
    crossing = above.sum(axis=1)
    active = (crossing == 1) | (crossing == 2)
    if not np.any(active):
        return 0.0
    h, P, above = h[active], layout[active], above[active]

    points = []
    for i, j in ((0, 1), (1, 2), (2, 0)):
        cut = above[:, i] != above[:, j]
        lam = np.where(cut, h[:, i] / np.where(cut, h[:, i] - h[:, j], 1.0), 0.0)
        points.append((cut, P[:, i] + lam[:, None] * (P[:, j] - P[:, i])))

    cuts = np.stack([c for c, _ in points], axis=1)
    coords = np.stack([x for _, x in points], axis=1)
    # each active face has exactly two cut edges
    order = np.argsort(~cuts, axis=1, kind="stable")[:, :2]
    a = np.take_along_axis(coords, order[:, 0, None, None], axis=1)[:, 0]
    b = np.take_along_axis(coords, order[:, 1, None, None], axis=1)[:, 0]
    return float(np.sum(np.linalg.norm(a - b, axis=1)))


def widest_level(mesh: TriMeshSurface, heights: np.ndarray, n_levels: int = 96, layout: Optional[np.ndarray] = None) -> float:
    """Level of the longest level set among n_levels evenly spaced ones"""
    layout = mesh.face_layout() if layout is None else layout
    lo, hi = float(np.min(heights)), float(np.max(heights))
    levels = lo + (hi - lo) * (np.arange(n_levels) + 0.5) / n_levels
    lengths = [level_length(mesh, heights, c, layout) for c in levels]
    return float(levels[int(np.argmax(lengths))])


# ----------------------------------------------------------------------
# Steiner edge graph
# ----------------------------------------------------------------------


def steiner_graph(mesh: TriMeshSurface, m: int = STEINER_POINTS) -> sparse.csr_matrix:
    """
    Symmetric weighted graph on the vertices plus m evenly spaced points per
    edge. Node V + e*m + k - 1 is the k-th point of edge e counted from its
    smaller vertex; all node pairs of a face are joined by their distance in
    the face layout.
    """
    edges, face_edges = mesh.edge_index
    V, E = mesh.n_vertices, edges.shape[0]
    layout = mesh.face_layout()
    t = np.arange(1, m + 1) / (m + 1.0)

    ids, pos = [mesh.faces], [layout]
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        flip = (mesh.faces[:, j] > mesh.faces[:, k])[:, None]
        start = np.where(flip, layout[:, k], layout[:, j])
        end = np.where(flip, layout[:, j], layout[:, k])
        pos.append(start[:, None, :] + t[None, :, None] * (end - start)[:, None, :])
        ids.append(V + face_edges[:, i, None] * m + np.arange(m)[None, :])
    ids = np.concatenate(ids, axis=1)
    pos = np.concatenate(pos, axis=1)

    iu, ju = np.triu_indices(ids.shape[1], k=1)
    a, b = ids[:, iu].ravel(), ids[:, ju].ravel()
    weights = np.linalg.norm(pos[:, iu] - pos[:, ju], axis=2).ravel()
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    n = V + E * m
    key = lo * n + hi
    # pairs on a shared edge appear in both faces
    order = np.lexsort((weights, key))
    key, weights, lo, hi = key[order], weights[order], lo[order], hi[order]
    first = np.r_[True, key[1:] != key[:-1]]
    upper = sparse.coo_matrix((weights[first], (lo[first], hi[first])), shape=(n, n)).tocsr()
    return (upper + upper.T).tocsr()


def level_loops(mesh: TriMeshSurface, heights: np.ndarray, level: float, m: int = STEINER_POINTS) -> List[np.ndarray]:
    """
    Components of {height = level} as closed Steiner-node sequences; each
    crossing is snapped to the nearest node on its edge.
    """
    edges, face_edges = mesh.edge_index
    edge_faces = mesh.edge_faces
    above = heights > level
    cut = above[edges[:, 0]] != above[edges[:, 1]]
    face_cut = cut[face_edges]

    visited = np.zeros(edges.shape[0], dtype=bool)
    loops = []
    for start in np.flatnonzero(cut):
        if visited[start]:
            continue
        chain = []
        e, f = int(start), int(edge_faces[start, 0])
        while not visited[e]:
            visited[e] = True
            chain.append(e)
            fe = face_edges[f]
            e = int(fe[(fe != e) & face_cut[f]][0])
            f = int(edge_faces[e, 1] if edge_faces[e, 0] == f else edge_faces[e, 0])

        chain = np.array(chain)
        lo, hi = edges[chain, 0], edges[chain, 1]
        t = (heights[lo] - level) / (heights[lo] - heights[hi])
        k = np.rint(t * (m + 1)).astype(np.int64)
        nodes = np.where(k <= 0, lo, np.where(k >= m + 1, hi, mesh.n_vertices + chain * m + k - 1))
        nodes = nodes[nodes != np.roll(nodes, 1)] if nodes.size > 1 else nodes
        loops.append(nodes)
    return loops


# ----------------------------------------------------------------------
# curve shortening
# ----------------------------------------------------------------------


def _steps(graph: sparse.csr_matrix, loop: np.ndarray) -> np.ndarray:
    return np.asarray(graph[loop, np.roll(loop, -1)]).ravel()


def _shortest(graph: sparse.csr_matrix, source: int, target: int, span: float) -> Optional[np.ndarray]:
    """Graph path source -> target shorter than span, or None"""
    dist, pred = dijkstra(graph, directed=False, indices=source, return_predecessors=True, limit=span)
    if not dist[target] < span * (1.0 - 1e-12):
        return None
    path = [target]
    while path[-1] != source:
        path.append(int(pred[path[-1]]))
    return np.array(path[::-1])


def folds_back(loop: np.ndarray, n_nodes: int) -> bool:
    """Every segment is traversed an even number of times"""
    a, b = loop, np.roll(loop, -1)
    _, counts = np.unique(np.minimum(a, b) * n_nodes + np.maximum(a, b), return_counts=True)
    return bool(np.all(counts % 2 == 0))


def shorten_loop(graph: sparse.csr_matrix, loop: np.ndarray, window: float, max_passes: int = 200):
    """
    Replace windows of about the given length by shortest graph paths,
    advancing half a window at a time, until a full pass changes nothing.
    Returns (loop, passes, converged).
    """
    loop = np.asarray(loop)
    for passes in range(1, max_passes + 1):
        changed = False
        covered, total = 0, loop.size
        while covered < total and loop.size >= 3:
            steps = _steps(graph, loop)
            w = int(np.searchsorted(np.cumsum(steps), window)) + 1
            w = min(max(w, 2), loop.size - 1)
            span = float(np.sum(steps[:w]))
            replacement = _shortest(graph, int(loop[0]), int(loop[w]), span)
            if replacement is not None:
                loop = np.concatenate([replacement, loop[w + 1:]])
                loop = loop[loop != np.roll(loop, 1)] if loop.size > 1 else loop
                changed = True
            advance = max(1, w // 2)
            loop = np.roll(loop, -advance)
            covered += advance
        if not changed or loop.size < 3:
            return loop, passes, not changed
    return loop, max_passes, False


def _random_direction(rng: np.random.Generator) -> np.ndarray:
    d = rng.standard_normal(3)
    return d / np.linalg.norm(d)


@log_execution_time(logger)
def mesh_geodesic_search(
    mesh: TriMeshSurface,
    n_sweeps: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    max_passes: int = 200,
) -> GeodesicLoop:
    """
    Shortest closed geodesic found by edge-loop curve shortening.

    Each sweep takes a random linear height function, picks the longest
    component of its widest level set and shortens it in the Steiner graph.
    Loops that collapse, fold back onto themselves or do not settle within
    max_passes are discarded; the shortest survivor is returned.
    """
    n_sweeps = settings.sweep_count if n_sweeps is None else n_sweeps
    if n_sweeps < 1:
        raise InputError("need at least one sweepout", {"n_sweeps": n_sweeps})
    rng = rng or np.random.default_rng(settings.seed)
    layout = mesh.face_layout()
    graph = steiner_graph(mesh)
    n_nodes = graph.shape[0]
    max_edge = float(np.max(mesh.face_lengths))

    best: Optional[GeodesicLoop] = None
    discarded = 0
    for _ in range(n_sweeps):
        direction = _random_direction(rng)
        heights = mesh.vertices @ direction
        loops = [c for c in level_loops(mesh, heights, widest_level(mesh, heights, layout=layout)) if c.size >= 3]
        if not loops:
            discarded += 1
            continue
        lengths = [float(np.sum(_steps(graph, c))) for c in loops]
        start = loops[int(np.argmax(lengths))]
        window = min(1.0, max(0.25 * max(lengths), 4.0 * max_edge))

        loop, passes, converged = shorten_loop(graph, start, window, max_passes)
        if not converged or loop.size < 3 or folds_back(loop, n_nodes):
            discarded += 1
            continue
        length = float(np.sum(_steps(graph, loop)))
        logger.debug(f"Sweep loop: {start.size} -> {loop.size} nodes, length {length:.6f} after {passes} passes")
        if best is None or length < best.length:
            best = GeodesicLoop(length=length, nodes=loop, direction=direction, passes=passes)

    if best is None:
        raise NumericalError(
            "every sweepout loop collapsed or failed to settle",
            {"n_sweeps": n_sweeps, "max_passes": max_passes},
        )
    logger.info(
        f"Geodesic search: length {best.length:.6f} over {n_sweeps} sweeps",
        extra={"event_type": "geodesic_search", "length": best.length, "discarded": discarded},
    )
    return best
