import math
from typing import Optional

import numpy as np

from foamopt.errors import InvertedElementError


def simplex_volumes(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Signed volumes of simplices, positive for positive orientation."""
    p = nodes[elements]
    edges = p[:, 1:, :] - p[:, :1, :]
    return np.linalg.det(edges) / math.factorial(nodes.shape[1])


def unique_edges(elements: np.ndarray) -> np.ndarray:
    k = elements.shape[1]
    pairs = np.concatenate([elements[:, [a, b]] for a in range(k) for b in range(a + 1, k)])
    return np.unique(np.sort(pairs, axis=1), axis=0)


class FineMesh:
    """Simplicial mesh: triangles in 2D, tetrahedra in 3D.

    Args:
        nodes: ``(V, d)`` node coordinates
        elements: ``(E, d + 1)`` node ids, positively oriented
        node_domain_phi: ``(V,)`` domain field at the nodes
        element_owner: ``(E,)`` coarse element of every fine element
    """

    def __init__(
        self,
        nodes,
        elements,
        node_domain_phi,
        element_owner: Optional[np.ndarray] = None,
    ):
        self.nodes = np.asarray(nodes, dtype=np.float64)
        self.elements = np.asarray(elements, dtype=np.int64)
        if self.nodes.ndim != 2 or self.nodes.shape[1] not in (2, 3):
            raise ValueError(f"nodes must be (V, 2) or (V, 3), got {self.nodes.shape}")
        if self.elements.ndim != 2 or self.elements.shape[1] != self.dim + 1:
            raise ValueError(
                f"{self.dim}D elements need {self.dim + 1} nodes, got shape {self.elements.shape}"
            )
        signed = simplex_volumes(self.nodes, self.elements)
        if len(signed) and np.any(signed <= 0):
            bad = np.nonzero(signed <= 0)[0]
            raise InvertedElementError(bad, signed[bad])
        self.volumes = signed
        self.node_domain_phi = np.asarray(node_domain_phi, dtype=np.float64)
        self.element_owner = (
            np.zeros(len(self.elements), dtype=np.int64)
            if element_owner is None
            else np.asarray(element_owner, dtype=np.int64)
        )
        edges = unique_edges(self.elements)
        self.l_a = float(
            np.mean(np.linalg.norm(self.nodes[edges[:, 0]] - self.nodes[edges[:, 1]], axis=1))
        )

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_dofs(self) -> int:
        return self.n_nodes * self.dim

    def element_centroids(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    def bbox(self):
        return self.nodes.min(axis=0), self.nodes.max(axis=0)

    @property
    def diagonal(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def __repr__(self):
        return f"FineMesh(dim={self.dim}, n_nodes={self.n_nodes}, n_elements={self.n_elements}, l_a={self.l_a:.4g})"
