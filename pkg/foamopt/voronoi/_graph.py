from typing import Optional, Tuple

import numpy as np


class VoronoiGraph:
    """Edges of a (possibly clipped) Voronoi diagram and their beam radii.

    Args:
        vertices: ``(V, d)`` vertex coordinates
        edges: ``(E, 2)`` vertex ids of every edge
        edge_seeds: ``(E, m)`` ids of the seeds whose cells share the edge, padded with ``-1``
        rbar: ``(E,)`` averaged beam radius of every edge
        n_seeds: number of seeds of the diagram
        box: ``(lo, hi)`` box the diagram was truncated to
        parent_edge: for clipped graphs, index of the unclipped edge each edge comes from
    """

    def __init__(
        self,
        vertices: np.ndarray,
        edges: np.ndarray,
        edge_seeds: np.ndarray,
        rbar: np.ndarray,
        n_seeds: int,
        box: Tuple[np.ndarray, np.ndarray],
        parent_edge: Optional[np.ndarray] = None,
    ):
        self.vertices = np.asarray(vertices, dtype=np.float64)
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        edge_seeds = np.asarray(edge_seeds, dtype=np.int64)
        self.edge_seeds = edge_seeds[:, None] if edge_seeds.ndim == 1 else edge_seeds
        self.rbar = np.asarray(rbar, dtype=np.float64).reshape(-1)
        self.n_seeds = int(n_seeds)
        self.box = (np.asarray(box[0], dtype=np.float64), np.asarray(box[1], dtype=np.float64))
        self.parent_edge = parent_edge
        self._neighbor_pairs = None

    @classmethod
    def empty(cls, dim: int, n_seeds: int, box) -> "VoronoiGraph":
        return cls(
            vertices=np.zeros((0, dim)),
            edges=np.zeros((0, 2), dtype=np.int64),
            edge_seeds=np.zeros((0, dim), dtype=np.int64),
            rbar=np.zeros(0),
            n_seeds=n_seeds,
            box=box,
            parent_edge=np.zeros(0, dtype=np.int64),
        )

    @property
    def dim(self) -> int:
        return self.box[0].shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def __repr__(self):
        return f"VoronoiGraph(n_seeds={self.n_seeds}, n_vertices={self.n_vertices}, n_edges={self.n_edges})"

    @property
    def adjacency_counts(self) -> np.ndarray:
        """``|X_j|`` of every edge"""
        return (self.edge_seeds >= 0).sum(axis=1)

    def segments(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices[self.edges[:, 0]], self.vertices[self.edges[:, 1]]

    @staticmethod
    def averaged_radii(edge_seeds: np.ndarray, radii: np.ndarray) -> np.ndarray:
        valid = edge_seeds >= 0
        if edge_seeds.size == 0:
            return np.zeros(edge_seeds.shape[0])
        values = np.where(valid, np.asarray(radii)[np.maximum(edge_seeds, 0)], 0.0)
        return values.sum(axis=1) / valid.sum(axis=1)

    def with_radii(self, radii) -> "VoronoiGraph":
        """Same geometry with beam radii recomputed from per-seed ``radii``."""
        return VoronoiGraph(
            self.vertices,
            self.edges,
            self.edge_seeds,
            self.averaged_radii(self.edge_seeds, radii),
            self.n_seeds,
            self.box,
            self.parent_edge,
        )

    def subset(self, edge_mask: np.ndarray) -> "VoronoiGraph":
        """Graph of the selected edges; unused vertices are dropped."""
        edge_ids = np.nonzero(edge_mask)[0]
        used, inverse = np.unique(self.edges[edge_ids].ravel(), return_inverse=True)
        parent = None if self.parent_edge is None else self.parent_edge[edge_ids]
        return VoronoiGraph(
            self.vertices[used],
            inverse.reshape(-1, 2),
            self.edge_seeds[edge_ids],
            self.rbar[edge_ids],
            self.n_seeds,
            self.box,
            parent,
        )

    def cell_edges(self, seed: int) -> np.ndarray:
        """Ids of the edges bounding the cell of ``seed``."""
        return np.nonzero(np.any(self.edge_seeds == seed, axis=1))[0]

    @property
    def neighbor_pairs(self) -> np.ndarray:
        """``(P, 2)`` sorted pairs of seeds whose cells share an edge."""
        if self._neighbor_pairs is None:
            m = self.edge_seeds.shape[1]
            pairs = []
            for a in range(m):
                for b in range(a + 1, m):
                    sa, sb = self.edge_seeds[:, a], self.edge_seeds[:, b]
                    ok = (sa >= 0) & (sb >= 0)
                    pairs.append(np.stack([np.minimum(sa, sb)[ok], np.maximum(sa, sb)[ok]], axis=1))
            if len(pairs) == 0:
                self._neighbor_pairs = np.zeros((0, 2), dtype=np.int64)
            else:
                self._neighbor_pairs = np.unique(np.concatenate(pairs), axis=0)
        return self._neighbor_pairs

    def cell_neighbors(self, seed: int) -> np.ndarray:
        pairs = self.neighbor_pairs
        return np.unique(
            np.concatenate([pairs[pairs[:, 0] == seed, 1], pairs[pairs[:, 1] == seed, 0]])
        )

    def cell_halfspaces(self, seed: int, positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Half-spaces ``normals @ x <= offsets`` bounding the cell of ``seed``.

        The faces of the truncation box are included.
        """
        positions = np.asarray(positions, dtype=np.float64)
        nbr = self.cell_neighbors(seed)
        normals = positions[nbr] - positions[seed]
        offsets = np.einsum("ij,ij->i", normals, 0.5 * (positions[nbr] + positions[seed]))
        eye = np.eye(self.dim)
        normals = np.concatenate([normals, eye, -eye])
        offsets = np.concatenate([offsets, self.box[1], -self.box[0]])
        return normals, offsets

    def cell_contains(self, seed: int, points: np.ndarray, positions: np.ndarray, tol: float = 0.0) -> np.ndarray:
        normals, offsets = self.cell_halfspaces(seed, positions)
        scale = np.linalg.norm(normals, axis=1)
        gap = (np.atleast_2d(points) @ normals.T - offsets) / scale
        return np.all(gap <= tol, axis=1)

    def distances(self, x0) -> np.ndarray:
        """Distance from point ``x0`` to every edge segment."""
        v1, v2 = self.segments()
        a = v2 - v1
        b = np.asarray(x0, dtype=np.float64) - v1
        aa = np.einsum("ij,ij->i", a, a)
        t = np.clip(np.einsum("ij,ij->i", a, b) / np.where(aa > 0, aa, 1.0), 0.0, 1.0)
        return np.linalg.norm(b - t[:, None] * a, axis=1)
