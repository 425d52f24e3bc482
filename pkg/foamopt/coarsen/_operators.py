"""Material-aware shape functions of one coarse element.

The fine displacements of a coarse element are ``q = Psi Q`` with
``Psi = M psi``: ``psi`` interpolates the coarse nodes onto the fine boundary
nodes with S-patches and ``M = [I; -k_i^-1 k_ib]`` extends boundary
displacements into the interior in equilibrium.
"""
import logging
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from foamopt.errors import SingularInteriorError
from foamopt.mesh import ON_FACE_RTOL, CoarseElement, on_face
from ._spatch import SPatchBasis, spatch_eval

INTERPOLATION_ATOL = 1e-10


def boundary_weights(elem: CoarseElement, nodes: np.ndarray, depth: int, check: bool = False, l_a: Optional[float] = None) -> np.ndarray:
    """Scalar S-patch weights ``(n_boundary, n_coarse_nodes)`` of the element boundary nodes.

    Every boundary node is interpolated on its ``boundary_face``. With
    ``check`` the other faces through a node are evaluated too and must agree
    within ``INTERPOLATION_ATOL``.
    """
    points = nodes[elem.boundary]
    W = np.zeros((len(points), elem.n_coarse_nodes))
    bases = [SPatchBasis(elem.corners[np.asarray(face)], depth, net.labels) for face, net in zip(elem.faces, elem.nets)]
    for f, (basis, net) in enumerate(zip(bases, elem.nets)):
        rows = np.nonzero(elem.boundary_face == f)[0]
        if len(rows):
            W[rows], outside = spatch_eval(basis, points[rows], net.transfer)
            if outside.any():
                logging.warning(
                    f"{int(outside.sum())} boundary node(s) of coarse element {elem.index} "
                    f"lie outside face {f}, their interpolation is extrapolated"
                )
    if check:
        tol = ON_FACE_RTOL * (l_a if l_a is not None else 1.0)
        for f, (basis, net) in enumerate(zip(bases, elem.nets)):
            rows = np.nonzero(on_face(points, elem.corners[np.asarray(elem.faces[f])], tol))[0]
            if len(rows) == 0:
                continue
            values, _ = spatch_eval(basis, points[rows], net.transfer)
            gap = float(np.max(np.abs(values - W[rows])))
            if gap > INTERPOLATION_ATOL:
                raise ValueError(
                    f"Face {f} of coarse element {elem.index} interpolates shared boundary nodes "
                    f"differently from their assigned face (gap {gap:.3e})"
                )
    return W


def boundary_interpolation(elem: CoarseElement, nodes: np.ndarray, depth: int, check: bool = False, l_a: Optional[float] = None) -> np.ndarray:
    """``psi``: coarse node displacements to fine boundary node displacements.

    Rows follow ``elem.boundary`` and columns ``elem.node_ids``, both node major.
    """
    W = boundary_weights(elem, nodes, depth, check=check, l_a=l_a)
    return np.kron(W, np.eye(nodes.shape[1]))


def _factorize_interior(k_i):
    try:
        lu = splinalg.splu(sparse.csc_matrix(k_i))
    except RuntimeError as e:
        raise SingularInteriorError(
            f"Interior stiffness block of a coarse element is singular ({e}); use a void density alpha > 0"
        ) from e
    return lu


def schur_transform(k_alpha, boundary_dofs: np.ndarray, interior_dofs: np.ndarray) -> np.ndarray:
    """Dense ``M`` with ``M[boundary] = I`` and ``M[interior] = -k_i^-1 k_ib``.

    Rows are the local DOFs of ``k_alpha``, columns the boundary DOFs.
    """
    k_alpha = sparse.csr_matrix(k_alpha)
    n_b = len(boundary_dofs)
    M = np.zeros((k_alpha.shape[0], n_b))
    M[boundary_dofs, np.arange(n_b)] = 1.0
    if len(interior_dofs):
        k_i = k_alpha[interior_dofs][:, interior_dofs]
        k_ib = k_alpha[interior_dofs][:, boundary_dofs]
        M[interior_dofs] = -_factorize_interior(k_i).solve(k_ib.toarray())
        _check_finite(M, "M")
    return M


def composite_transform(k_alpha, boundary_dofs: np.ndarray, interior_dofs: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """``Psi = M psi`` from one factorization of the interior block."""
    k_alpha = sparse.csr_matrix(k_alpha)
    Psi = np.zeros((k_alpha.shape[0], psi.shape[1]))
    Psi[boundary_dofs] = psi
    if len(interior_dofs):
        k_i = k_alpha[interior_dofs][:, interior_dofs]
        k_ib = k_alpha[interior_dofs][:, boundary_dofs]
        Psi[interior_dofs] = -_factorize_interior(k_i).solve(np.asarray(k_ib @ psi))
        _check_finite(Psi, "Psi")
    return Psi


def _check_finite(matrix, name):
    if not np.all(np.isfinite(matrix)):
        raise SingularInteriorError(
            f"Non-finite entries in the transform {name}; the interior stiffness is singular, use alpha > 0"
        )


def coarse_stiffness(k_alpha, Psi: np.ndarray) -> np.ndarray:
    """``K^alpha = Psi^T k^alpha Psi``, symmetrized."""
    K = Psi.T @ np.asarray(k_alpha @ Psi)
    return 0.5 * (K + K.T)


class ElementOperators:
    """Operators of one coarse element for one density field.

    Args:
        elem: the coarse element
        k_alpha: fine stiffness over the element's local DOFs
        psi: boundary interpolation
        Psi: composite transform
        boundary_dofs, interior_dofs: local DOF partition
        local_dofs: ``(n_fine_elements, (d + 1) d)`` local DOFs of the fine elements
        coarse_dofs: global coarse DOFs of the element
    """

    def __init__(
        self,
        elem: CoarseElement,
        k_alpha,
        psi: np.ndarray,
        Psi: np.ndarray,
        boundary_dofs: np.ndarray,
        interior_dofs: np.ndarray,
        local_dofs: np.ndarray,
        coarse_dofs: np.ndarray,
    ):
        self.elem = elem
        self.k_alpha = k_alpha
        self.psi = psi
        self.Psi = Psi
        self.boundary_dofs = boundary_dofs
        self.interior_dofs = interior_dofs
        self.local_dofs = local_dofs
        self.coarse_dofs = coarse_dofs
        self.K_alpha = coarse_stiffness(k_alpha, Psi)
        self._M = None

    @property
    def M(self) -> np.ndarray:
        if self._M is None:
            self._M = schur_transform(self.k_alpha, self.boundary_dofs, self.interior_dofs)
        return self._M

    def __repr__(self):
        return (
            f"ElementOperators(element={self.elem.index}, n_local_dofs={self.Psi.shape[0]}, "
            f"n_coarse_dofs={self.Psi.shape[1]})"
        )

    def fine_displacement(self, Q_alpha: np.ndarray) -> np.ndarray:
        """``q^alpha = Psi Q^alpha`` over the local DOFs."""
        return self.Psi @ Q_alpha


def coarse_gradient(ops: ElementOperators, dHe: np.ndarray, k_hat: np.ndarray) -> np.ndarray:
    """``Psi^T (sum_e dH_e k_e) Psi`` with ``Psi`` frozen.

    Args:
        ops: operators of the element
        dHe: density derivatives of the element's fine elements
        k_hat: unit-density stiffness of those fine elements
    """
    dHe = np.asarray(dHe, dtype=np.float64)
    n = ops.Psi.shape[0]
    if not np.any(dHe):
        m = ops.Psi.shape[1]
        return np.zeros((m, m))
    nd = ops.local_dofs.shape[1]
    rows = np.repeat(ops.local_dofs, nd, axis=1).ravel()
    cols = np.tile(ops.local_dofs, (1, nd)).ravel()
    dk = sparse.coo_matrix(((dHe[:, None, None] * k_hat).ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return coarse_stiffness(dk, ops.Psi)
