from typing import Optional

import numpy as np

from ._graph import VoronoiGraph

# bisection of the zero crossing runs to machine resolution so that the same
# edge clipped from different sample grids gives the same end point
_BISECTION_STEPS = 60


def _clip_to_box(v1: np.ndarray, v2: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Liang-Barsky parameters ``t0 <= t1`` of every segment inside ``[lo, hi]``."""
    d = v2 - v1
    t0 = np.zeros(len(v1))
    t1 = np.ones(len(v1))
    invalid = np.zeros(len(v1), dtype=bool)
    for axis in range(v1.shape[1]):
        for p, q in ((-d[:, axis], v1[:, axis] - lo[axis]), (d[:, axis], hi[axis] - v1[:, axis])):
            parallel = p == 0
            invalid |= parallel & (q < 0)
            r = q / np.where(parallel, 1.0, p)
            t0 = np.where(p < 0, np.maximum(t0, r), t0)
            t1 = np.where(p > 0, np.minimum(t1, r), t1)
    valid = ~invalid & (t0 <= t1)
    return t0, t1, valid


def _bisect(phi, w1, w2, t_out, t_in):
    """Parameters of the zero crossing of ``phi`` on ``w1 + t (w2 - w1)``, inside side."""
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (t_out + t_in)
        inside = phi(w1 + mid[:, None] * (w2 - w1)) >= 0.0
        t_in = np.where(inside, mid, t_in)
        t_out = np.where(inside, t_out, mid)
        if np.all(np.abs(t_in - t_out) <= 1e-16):
            break
    return t_in


def clip(graph: VoronoiGraph, domain, l_a: Optional[float] = None) -> VoronoiGraph:
    """Restrict the edges of ``graph`` to the design domain.

    Edges are first cut to the bounding box of ``domain``, then sampled every
    ``l_a / 2``; each run of samples with ``phi >= 0`` becomes one clipped edge
    whose ends are located by bisection. Edges that stay inside keep their
    vertices. Clipped edges keep the adjacent seeds and radius of the edge they
    come from, recorded in ``parent_edge``.

    Args:
        graph: unclipped Voronoi graph
        domain: ``foamopt.domain.DomainField``
        l_a: sampling length, defaults to 1% of the domain diagonal
    """
    dim = graph.dim
    if l_a is None:
        l_a = 0.01 * domain.diagonal
    if graph.n_edges == 0:
        return VoronoiGraph.empty(dim, graph.n_seeds, graph.box)
    lo, hi = domain.bbox()
    v1, v2 = graph.segments()
    t0, t1, valid = _clip_to_box(v1, v2, lo, hi)
    ids = np.nonzero(valid)[0]
    if len(ids) == 0:
        return VoronoiGraph.empty(dim, graph.n_seeds, graph.box)

    a, b = v1[ids], v2[ids]
    w1 = a + t0[ids, None] * (b - a)
    w2 = a + t1[ids, None] * (b - a)
    length = np.linalg.norm(w2 - w1, axis=1)
    n_samples = np.maximum(2, np.ceil(length / (0.5 * l_a)).astype(np.int64) + 1)
    offsets = np.cumsum(n_samples) - n_samples
    owner = np.repeat(np.arange(len(ids)), n_samples)
    local = np.arange(owner.shape[0]) - offsets[owner]
    t = local / (n_samples[owner] - 1)
    inside = domain.phi(w1[owner] + t[:, None] * (w2[owner] - w1[owner])) >= 0.0

    first = local == 0
    last = local == n_samples[owner] - 1
    prev_in = np.concatenate([[False], inside[:-1]]) & ~first
    next_in = np.concatenate([inside[1:], [False]]) & ~last
    starts = np.nonzero(inside & ~prev_in)[0]
    ends = np.nonzero(inside & ~next_in)[0]
    if len(starts) == 0:
        return VoronoiGraph.empty(dim, graph.n_seeds, graph.box)
    piece_owner = owner[starts]

    step = 1.0 / (n_samples[piece_owner] - 1)
    ts = t[starts]
    cut = ~first[starts]
    ts[cut] = _bisect(domain.phi, w1[piece_owner[cut]], w2[piece_owner[cut]], ts[cut] - step[cut], ts[cut])
    te = t[ends]
    cut = ~last[ends]
    te[cut] = _bisect(domain.phi, w1[piece_owner[cut]], w2[piece_owner[cut]], te[cut] + step[cut], te[cut])

    # map back onto the original edge parameter
    span = t1[ids][piece_owner] - t0[ids][piece_owner]
    s_start = t0[ids][piece_owner] + ts * span
    s_end = t0[ids][piece_owner] + te * span
    parent = ids[piece_owner]
    keep = s_end > s_start
    parent, s_start, s_end = parent[keep], s_start[keep], s_end[keep]

    # pieces that reach an original end point reuse its vertex
    n_old = graph.n_vertices
    new_points = []
    start_vertex = graph.edges[parent, 0].copy()
    end_vertex = graph.edges[parent, 1].copy()
    moved = s_start > 0.0
    start_vertex[moved] = n_old + np.arange(moved.sum())
    new_points.append(v1[parent[moved]] + s_start[moved, None] * (v2[parent[moved]] - v1[parent[moved]]))
    moved_end = s_end < 1.0
    end_vertex[moved_end] = n_old + moved.sum() + np.arange(moved_end.sum())
    new_points.append(v1[parent[moved_end]] + s_end[moved_end, None] * (v2[parent[moved_end]] - v1[parent[moved_end]]))

    vertices = np.concatenate([graph.vertices] + new_points)
    edges = np.stack([start_vertex, end_vertex], axis=1)
    used, remap = np.unique(edges.ravel(), return_inverse=True)
    return VoronoiGraph(
        vertices=vertices[used],
        edges=remap.reshape(-1, 2),
        edge_seeds=graph.edge_seeds[parent],
        rbar=graph.rbar[parent],
        n_seeds=graph.n_seeds,
        box=graph.box,
        parent_edge=parent,
    )
