"""Voronoi geometry around a single query point.

``two_ring_seeds`` and ``local_reconstruct`` rebuild the diagram from the
seeds close to a point only; ``three_point_beam`` replaces it by the locus
equidistant from the nearest seeds.
"""
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from foamopt.errors import DegenerateConfigurationError
from ._clip import clip
from ._graph import VoronoiGraph
from ._seeds import SeedSet
from ._tessellate import tessellate

DEFAULT_K = {2: 16, 3: 32}


def _positions(seeds) -> np.ndarray:
    return seeds.positions if isinstance(seeds, SeedSet) else np.asarray(seeds, dtype=np.float64)


def two_ring_seeds(
    x0,
    seeds,
    k: Optional[int] = None,
    rho: Optional[float] = None,
    tree: Optional[cKDTree] = None,
) -> np.ndarray:
    """Ids of the seeds that determine the Voronoi geometry near ``x0``, nearest first.

    Starts from the ``k`` nearest seeds. With a radius of interest ``rho`` the set
    is grown until the next seed is farther than ``d_1 + 2 rho`` from ``x0``
    (``d_1`` the distance to the nearest seed): such a seed cannot change any
    Voronoi edge within ``rho`` of ``x0``.
    """
    positions = _positions(seeds)
    n, dim = positions.shape
    if k is None:
        k = DEFAULT_K[dim]
    k = max(1, min(int(k), n))
    if tree is None:
        tree = cKDTree(positions)
    while True:
        if k >= n:
            _, idx = tree.query(x0, k=n)
            return np.atleast_1d(idx).astype(np.int64)
        dist, idx = tree.query(x0, k=k + 1)
        if rho is None or dist[k] > dist[0] + 2.0 * rho:
            return idx[:k].astype(np.int64)
        k = min(2 * k, n)


class LocalVoronoi:
    """Context for repeated local reconstructions on one seed set.

    Args:
        seeds: the seed set
        domain: design domain the edges are clipped to
        box: truncation box used for every reconstruction
        l_a: clipping sample length
        rho: radius of interest around query points
        k: initial size of the nearest-seed set
    """

    def __init__(self, seeds: SeedSet, domain, box, l_a: float, rho: float, k: Optional[int] = None):
        self.seeds = seeds
        self.domain = domain
        self.box = box
        self.l_a = l_a
        self.rho = rho
        self.k = DEFAULT_K[seeds.dim] if k is None else k
        self.tree = cKDTree(seeds.positions)

    def seed_ids(self, x0) -> np.ndarray:
        ids = two_ring_seeds(x0, self.seeds.positions, self.k, self.rho, self.tree)
        if len(ids) < self.seeds.dim + 1:
            ids = np.arange(self.seeds.n_seeds)
        return ids

    def graph(self, ids: np.ndarray) -> VoronoiGraph:
        """Clipped diagram of the seeds ``ids``, with adjacency in global seed ids."""
        ids = np.sort(ids)
        subset = SeedSet(self.seeds.positions[ids], self.seeds.radii[ids])
        local = clip(tessellate(subset, self.box), self.domain, self.l_a)
        edge_seeds = np.where(local.edge_seeds >= 0, ids[np.maximum(local.edge_seeds, 0)], -1)
        return VoronoiGraph(
            local.vertices,
            local.edges,
            edge_seeds,
            local.rbar,
            self.seeds.n_seeds,
            local.box,
            None,
        )

    def beams_near(self, x0) -> VoronoiGraph:
        """Clipped edges within ``rho`` of ``x0``."""
        x0 = np.asarray(x0, dtype=np.float64)
        graph = self.graph(self.seed_ids(x0))
        if graph.n_edges == 0:
            return graph
        return graph.subset(graph.distances(x0) <= self.rho)


def local_reconstruct(
    x0, seeds: SeedSet, k: Optional[int], domain, box, l_a: float, rho: float
) -> VoronoiGraph:
    """Beams of the local diagram around ``x0`` that lie within ``rho`` of it."""
    return LocalVoronoi(seeds, domain, box, l_a, rho, k).beams_near(x0)


class ThreePointBeam:
    """Locus equidistant from the nearest seeds of a point.

    In 2D the locus is the bisector line of the two nearest seeds, in 3D the
    line through the circumcenter of the three nearest seeds, normal to their
    plane. ``phi = rbar - distance`` approximates the foam field near it.
    """

    def __init__(self, point, direction, rbar: float, distance: float, seeds: np.ndarray):
        self.point = point
        self.direction = direction
        self.rbar = rbar
        self.distance = distance
        self.seeds = seeds

    @property
    def phi(self) -> float:
        return self.rbar - self.distance

    def __repr__(self):
        return f"ThreePointBeam(seeds={self.seeds.tolist()}, rbar={self.rbar:.4g}, distance={self.distance:.4g})"


def three_point_loci(points, positions, nearest, tol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized distances from ``points`` to their three-point loci.

    Args:
        points: ``(P, d)`` query points
        positions: ``(N, d)`` seed positions
        nearest: ``(P, >=d)`` seed ids sorted by distance to each point

    Returns:
        ``(distance, locus point, degenerate mask)``
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    dim = points.shape[1]
    scale = np.linalg.norm(positions.max(axis=0) - positions.min(axis=0)) if len(positions) > 1 else 1.0
    xa = positions[nearest[:, 0]]
    xb = positions[nearest[:, 1]]
    if dim == 2:
        normal = xb - xa
        norm = np.linalg.norm(normal, axis=1)
        degenerate = norm <= tol * max(scale, 1.0)
        normal = normal / np.where(degenerate, 1.0, norm)[:, None]
        center = 0.5 * (xa + xb)
        distance = np.abs(np.einsum("ij,ij->i", points - center, normal))
        return distance, center, degenerate
    xc = positions[nearest[:, 2]]
    u, v = xb - xa, xc - xa
    w = np.cross(u, v)
    w2 = np.einsum("ij,ij->i", w, w)
    degenerate = w2 <= (tol * max(scale, 1.0) ** 2) ** 2 + 1e-300
    safe = np.where(degenerate, 1.0, w2)
    center = xa + (
        np.einsum("ij,ij->i", u, u)[:, None] * np.cross(v, w)
        + np.einsum("ij,ij->i", v, v)[:, None] * np.cross(w, u)
    ) / (2.0 * safe[:, None])
    axis = w / np.sqrt(safe)[:, None]
    rel = points - center
    perp = rel - np.einsum("ij,ij->i", rel, axis)[:, None] * axis
    return np.linalg.norm(perp, axis=1), center, degenerate


def three_point_beam(x0, seeds: SeedSet, ids: Optional[np.ndarray] = None) -> ThreePointBeam:
    """Three-point approximation of the beam nearest to ``x0``.

    Args:
        x0: query point
        seeds: seed set
        ids: seed ids sorted by distance to ``x0``; queried when ``None``
    """
    x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
    dim = seeds.dim
    if seeds.n_seeds < dim:
        raise DegenerateConfigurationError(f"three-point locus needs {dim} seeds, got {seeds.n_seeds}")
    if ids is None:
        _, ids = cKDTree(seeds.positions).query(x0, k=dim)
    nearest = np.asarray(ids, dtype=np.int64).reshape(-1)[:dim]
    distance, center, degenerate = three_point_loci(x0[None, :], seeds.positions, nearest[None, :])
    if degenerate[0]:
        raise DegenerateConfigurationError(
            f"seeds {nearest.tolist()} are {'coincident' if dim == 2 else 'collinear'}"
        )
    if dim == 2:
        d = seeds.positions[nearest[1]] - seeds.positions[nearest[0]]
        direction = np.array([-d[1], d[0]]) / np.linalg.norm(d)
    else:
        w = np.cross(
            seeds.positions[nearest[1]] - seeds.positions[nearest[0]],
            seeds.positions[nearest[2]] - seeds.positions[nearest[0]],
        )
        direction = w / np.linalg.norm(w)
    return ThreePointBeam(
        point=center[0],
        direction=direction,
        rbar=float(np.mean(seeds.radii[nearest])),
        distance=float(distance[0]),
        seeds=nearest,
    )
