"""Voronoi diagram of a seed set as the dual of its Delaunay triangulation."""
import logging
from collections import deque
from typing import Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, cKDTree

try:
    from scipy.spatial import QhullError
except ImportError:  # scipy < 1.8
    from scipy.spatial.qhull import QhullError

from foamopt.errors import DegenerateConfigurationError, DuplicateSeedError
from ._graph import VoronoiGraph
from ._seeds import SeedSet

# relative tolerances, scaled by the diagonal of the truncation box
_DUPLICATE_RTOL = 1e-12
_MERGE_RTOL = 1e-10
_FLAT_RTOL = 1e-10
_MAX_BFS = 256


def margin_box(lo, hi, factor: float = 2.0) -> Tuple[np.ndarray, np.ndarray]:
    """``[lo, hi]`` expanded on every side by ``factor`` times its diagonal."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    pad = factor * float(np.linalg.norm(hi - lo))
    return lo - pad, hi + pad


def find_duplicate_seeds(positions: np.ndarray, tol: float) -> np.ndarray:
    """Sorted ``(P, 2)`` pairs of seeds closer than ``tol``."""
    pairs = cKDTree(positions).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = np.sort(pairs, axis=1)
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def _mirror(positions: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    out = [positions]
    for axis in range(positions.shape[1]):
        for plane in (lo[axis], hi[axis]):
            image = positions.copy()
            image[:, axis] = 2.0 * plane - image[:, axis]
            out.append(image)
    return np.concatenate(out)


def circumcenters(points: np.ndarray, simplices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Circumcenters of ``simplices`` and a mask of flat (zero volume) simplices.

    Flat simplices get a meaningless center and must be resolved by the caller.
    """
    dim = points.shape[1]
    p = points[simplices]
    a = p[:, 1:, :] - p[:, :1, :]
    b = 0.5 * np.sum(a * a, axis=-1)
    scale = np.max(np.abs(a), axis=(1, 2))
    flat = np.abs(np.linalg.det(a)) <= _FLAT_RTOL * np.maximum(scale, 1e-300) ** dim
    a = np.where(flat[:, None, None], np.eye(dim), a)
    centers = p[:, 0, :] + np.linalg.solve(a, b[..., None])[..., 0]
    centers[flat] = p[flat].mean(axis=1)
    return centers, flat


def _resolve_flat(tri, points, centers, flat, which, tol):
    """Give flat simplices the center of a cospherical non-flat neighbor."""
    unresolved = 0
    for s in which:
        seen = {s}
        queue = deque(tri.neighbors[s])
        found = False
        while queue and len(seen) < _MAX_BFS:
            t = queue.popleft()
            if t < 0 or t in seen:
                continue
            seen.add(t)
            if not flat[t]:
                r = np.linalg.norm(points[tri.simplices[s]] - centers[t], axis=1)
                if r.max() - r.min() <= tol * max(r.max(), 1.0):
                    centers[s] = centers[t]
                    found = True
                    break
            queue.extend(tri.neighbors[t])
        unresolved += not found
    if unresolved:
        logging.warning(f"{unresolved} flat Delaunay simplices kept their vertex mean as center")


def tessellate(seeds: SeedSet, bbox) -> VoronoiGraph:
    """Voronoi diagram of ``seeds`` truncated to ``bbox``.

    The seeds are mirrored across the faces of ``bbox`` so that every cell of a
    real seed is bounded by the box; only edges shared exclusively by real seeds
    are reported. Edges of a degenerate (cocircular / cospherical) configuration
    that the triangulation splits are merged again and carry the union of their
    adjacent seeds.

    Args:
        seeds: the seed set
        bbox: ``(lo, hi)`` truncation box, strictly containing all seeds

    Returns:
        the ``VoronoiGraph`` with per-edge averaged radii
    """
    positions = seeds.positions
    n, dim = positions.shape
    lo = np.asarray(bbox[0], dtype=np.float64)
    hi = np.asarray(bbox[1], dtype=np.float64)
    if lo.shape != (dim,) or hi.shape != (dim,):
        raise ValueError(f"bbox must hold two {dim}-vectors")
    if np.any(positions <= lo) or np.any(positions >= hi):
        raise ValueError("The truncation box must strictly contain all seeds")
    diag = float(np.linalg.norm(hi - lo))

    duplicates = find_duplicate_seeds(positions, _DUPLICATE_RTOL * diag)
    if len(duplicates) > 0:
        raise DuplicateSeedError(duplicates, _DUPLICATE_RTOL * diag)

    if n == 1:
        return VoronoiGraph.empty(dim, n, (lo, hi))

    points = _mirror(positions, lo, hi)
    try:
        tri = Delaunay(points)
    except QhullError as e:
        raise DegenerateConfigurationError(f"Delaunay triangulation failed: {e}") from e
    simplices = tri.simplices
    n_simplex = simplices.shape[0]

    # one Voronoi edge per interior Delaunay facet (s, t), s < t
    s_idx = np.repeat(np.arange(n_simplex), dim + 1)
    k_idx = np.tile(np.arange(dim + 1), n_simplex)
    t_idx = tri.neighbors.ravel()
    keep = t_idx > s_idx
    s_idx, k_idx, t_idx = s_idx[keep], k_idx[keep], t_idx[keep]
    mask = np.ones((len(s_idx), dim + 1), dtype=bool)
    mask[np.arange(len(s_idx)), k_idx] = False
    facets = simplices[s_idx][mask].reshape(-1, dim)
    real = np.all(facets < n, axis=1)
    s_idx, t_idx, facets = s_idx[real], t_idx[real], facets[real]
    if len(facets) == 0:
        return VoronoiGraph.empty(dim, n, (lo, hi))

    used, inverse = np.unique(np.concatenate([s_idx, t_idx]), return_inverse=True)
    centers, flat = circumcenters(points, simplices[used])
    if flat.any():
        # neighbors of used flat simplices may be unused; compute every center
        all_centers, all_flat = circumcenters(points, simplices)
        _resolve_flat(tri, points, all_centers, all_flat, used[flat], 1e-8)
        centers = all_centers[used]

    # merge coincident Voronoi vertices
    pairs = cKDTree(centers).query_pairs(_MERGE_RTOL * diag, output_type="ndarray")
    n_used = len(used)
    if len(pairs) == 0:
        n_vertex, labels = n_used, np.arange(n_used)
    else:
        graph = coo_matrix(
            (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n_used, n_used)
        )
        n_vertex, labels = connected_components(graph, directed=False)
    counts = np.bincount(labels, minlength=n_vertex)
    vertices = np.stack(
        [np.bincount(labels, weights=centers[:, a], minlength=n_vertex) / counts for a in range(dim)],
        axis=1,
    )

    v = labels[inverse].reshape(2, -1).T
    nonzero = v[:, 0] != v[:, 1]
    v, facets = np.sort(v[nonzero], axis=1), facets[nonzero]
    if len(v) == 0:
        return VoronoiGraph.empty(dim, n, (lo, hi))
    edges, edge_of = np.unique(v, axis=0, return_inverse=True)
    edge_of = edge_of.reshape(-1)
    n_edge = len(edges)

    # union of adjacent seeds over merged duplicates
    key = np.unique(np.repeat(edge_of, dim) * n + facets.ravel())
    owner, seed = key // n, key % n
    per_edge = np.bincount(owner, minlength=n_edge)
    start = np.cumsum(per_edge) - per_edge
    edge_seeds = np.full((n_edge, per_edge.max()), -1, dtype=np.int64)
    edge_seeds[owner, np.arange(len(key)) - start[owner]] = seed

    # drop vertices no edge references any more
    kept, remap = np.unique(edges.ravel(), return_inverse=True)
    vertices = vertices[kept]
    edges = remap.reshape(-1, 2)

    if np.any(per_edge > dim):
        logging.debug(f"{int(np.sum(per_edge > dim))} Voronoi edges are shared by more than {dim} cells")

    return VoronoiGraph(
        vertices=vertices,
        edges=edges,
        edge_seeds=edge_seeds,
        rbar=VoronoiGraph.averaged_radii(edge_seeds, seeds.radii),
        n_seeds=n,
        box=(lo, hi),
        parent_edge=None,
    )
