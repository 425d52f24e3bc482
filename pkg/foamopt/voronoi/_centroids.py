from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

# symmetric interior rules, exact for quadratics
_RULES = {
    2: (np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]), np.full(3, 1 / 3)),
    3: (
        np.array(
            [
                [0.5854101966249685, 0.1381966011250105, 0.1381966011250105, 0.1381966011250105],
                [0.1381966011250105, 0.5854101966249685, 0.1381966011250105, 0.1381966011250105],
                [0.1381966011250105, 0.1381966011250105, 0.5854101966249685, 0.1381966011250105],
                [0.1381966011250105, 0.1381966011250105, 0.1381966011250105, 0.5854101966249685],
            ]
        ),
        np.full(4, 1 / 4),
    ),
}


class CentroidQuadrature:
    """Quadrature points of a fine mesh restricted to the design domain.

    Built once per mesh; ``centroids`` assigns every point to its nearest seed.

    Args:
        mesh: fine mesh with ``nodes``, ``elements`` and ``volumes``
        domain: design domain; points outside it are dropped
    """

    def __init__(self, mesh, domain):
        dim = mesh.nodes.shape[1]
        bary, weights = _RULES[dim]
        corners = mesh.nodes[mesh.elements]
        points = np.einsum("qk,ekd->eqd", bary, corners).reshape(-1, dim)
        mass = (mesh.volumes[:, None] * weights[None, :]).reshape(-1)
        inside = domain.phi(points) >= 0.0
        self.points = points[inside]
        self.weights = mass[inside]
        self.dim = dim

    def centroids(self, positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Centroids of the cells of ``positions`` clipped to the domain.

        Returns:
            ``(centroids, valid)``; cells without any quadrature point are NaN and invalid
        """
        positions = np.asarray(positions, dtype=np.float64)
        n = positions.shape[0]
        if len(self.points) == 0:
            return np.full((n, self.dim), np.nan), np.zeros(n, dtype=bool)
        _, owner = cKDTree(positions).query(self.points)
        mass = np.bincount(owner, weights=self.weights, minlength=n)
        moment = np.stack(
            [np.bincount(owner, weights=self.weights * self.points[:, a], minlength=n) for a in range(self.dim)],
            axis=1,
        )
        valid = mass > 0
        centroids = np.full((n, self.dim), np.nan)
        centroids[valid] = moment[valid] / mass[valid, None]
        return centroids, valid


def cell_centroids(seeds, mesh, domain) -> Tuple[np.ndarray, np.ndarray]:
    """Centroids of the Voronoi cells of ``seeds`` intersected with ``domain``."""
    return CentroidQuadrature(mesh, domain).centroids(seeds.positions)
