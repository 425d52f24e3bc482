"""Detection of points where the foam field is not differentiable in the seeds."""
import logging
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from foamopt.voronoi import circumcenters, three_point_loci

GUARD_RTOL = 1e-3


def cospherical(positions: np.ndarray, nearest: np.ndarray, tol: float) -> np.ndarray:
    """Whether the ``d + 2`` seeds of every row of ``nearest`` lie on one sphere within ``tol``.

    The sphere is the circumsphere of the ``d + 1`` nearest seeds; flat
    simplices have no finite circumsphere and are not flagged.
    """
    dim = positions.shape[1]
    simplices = nearest[:, : dim + 1]
    centers, flat = circumcenters(positions, simplices)
    radius = np.linalg.norm(positions[simplices[:, 0]] - centers, axis=1)
    extra = np.linalg.norm(positions[nearest[:, dim + 1]] - centers, axis=1)
    near = np.abs(extra - radius) <= tol
    return near & ~flat


def differentiability_guard(
    x0,
    positions: np.ndarray,
    l_a: float,
    nearest: Optional[np.ndarray] = None,
    rtol: float = GUARD_RTOL,
) -> np.ndarray:
    """Flag near critical points of the Voronoi geometry.

    A point is flagged when its ``d + 2`` nearest seeds are cocircular /
    cospherical within ``rtol * l_a``, or when it lies within ``rtol * l_a``
    of the locus equidistant from its ``d`` nearest seeds (it sits on a
    Voronoi edge), or when that locus is degenerate.

    Args:
        x0: ``(P, d)`` points or a single point
        positions: ``(N, d)`` seed positions
        l_a: fine mesh length scale
        nearest: ``(P, >= d + 2)`` seed ids sorted by distance, queried when ``None``

    Returns:
        ``(P,)`` boolean flags
    """
    points = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    positions = np.asarray(positions, dtype=np.float64)
    n, dim = positions.shape
    tol = rtol * l_a
    flags = np.zeros(len(points), dtype=bool)
    if n < dim:
        return flags
    if nearest is None:
        _, nearest = cKDTree(positions).query(points, k=min(n, dim + 2))
        nearest = nearest.reshape(len(points), -1)
    distance, _, degenerate = three_point_loci(points, positions, nearest)
    flags |= degenerate | (distance <= tol)
    if nearest.shape[1] >= dim + 2:
        flags |= cospherical(positions, nearest, tol)
    if flags.any():
        logging.debug(f"{int(flags.sum())} of {len(points)} points near a critical Voronoi configuration")
    return flags
