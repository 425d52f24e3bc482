from typing import Optional, Tuple

import numpy as np
from scipy.special import gammaln

from foamopt.mesh import face_labels
from ._barycentric import polygon_coordinates


def multinomial(labels: np.ndarray) -> np.ndarray:
    """``|i|! / prod_k i_k!`` of every label row."""
    labels = np.asarray(labels)
    return np.rint(np.exp(gammaln(labels.sum(axis=1) + 1) - gammaln(labels + 1).sum(axis=1)))


class SPatchBasis:
    """Multi-sided Bezier basis of depth ``d`` over a side or a polygonal face.

    ``B_i(x) = (d choose i) prod_k w_k(x)^{i_k}`` with mean value coordinates
    ``w``; on a side it is the Bernstein basis.

    Args:
        polygon: ``(p, dim)`` corners in cyclic order
        depth: ``d >= 1``
        labels: ``(L, p)`` control labels, defaults to every ``|i| = d``
    """

    def __init__(self, polygon: np.ndarray, depth: int, labels: Optional[np.ndarray] = None):
        self.polygon = np.asarray(polygon, dtype=np.float64)
        self.depth = int(depth)
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth}")
        self.labels = face_labels(len(self.polygon), self.depth) if labels is None else np.asarray(labels)
        if np.any(self.labels.sum(axis=1) != self.depth):
            raise ValueError(f"labels must sum to the depth {self.depth}")
        self.coefficients = multinomial(self.labels)

    @property
    def n_sides(self) -> int:
        return self.polygon.shape[0]

    def __len__(self):
        return self.labels.shape[0]

    def __repr__(self):
        return f"SPatchBasis(n_sides={self.n_sides}, depth={self.depth}, n_labels={len(self)})"

    def barycentric(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return polygon_coordinates(self.polygon, points)

    def __call__(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Basis values ``(n, L)`` at ``points`` and the extrapolation flags."""
        w, outside = self.barycentric(points)
        values = self.coefficients * np.prod(w[:, None, :] ** self.labels[None, :, :], axis=2)
        return values, outside


def spatch_eval(basis: SPatchBasis, points: np.ndarray, transfer: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate ``basis`` at ``points``.

    With a ``transfer`` matrix (``FaceNet.transfer``) labels sharing a control
    node are merged by summing their basis functions.

    Returns:
        ``(values, outside)``
    """
    values, outside = basis(np.atleast_2d(points))
    if transfer is not None:
        values = values @ transfer
    return values, outside
