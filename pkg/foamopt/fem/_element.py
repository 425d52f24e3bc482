"""Linear simplex elements: constant strain triangles and tetrahedra."""
import math
from typing import Tuple

import numpy as np

from foamopt.errors import InvertedElementError
from ._material import Material


def shape_gradients(nodes: np.ndarray, elements: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients of the barycentric shape functions and the element volumes.

    Returns:
        ``(grads, volumes)`` of shapes ``(E, d + 1, d)`` and ``(E,)``
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    elements = np.atleast_2d(np.asarray(elements, dtype=np.int64))
    dim = nodes.shape[1]
    p = nodes[elements]
    # rows of inv([1, x; ...]^T) hold the affine coefficients of every barycentric coordinate
    A = np.concatenate([np.ones(p.shape[:2] + (1,)), p], axis=2).transpose(0, 2, 1)
    det = np.linalg.det(A)
    volumes = det / math.factorial(dim)
    if np.any(volumes <= 0):
        bad = np.nonzero(volumes <= 0)[0]
        raise InvertedElementError(bad, volumes[bad])
    grads = np.linalg.inv(A)[:, :, 1:]
    return grads, volumes


def strain_displacement(grads: np.ndarray) -> np.ndarray:
    """Voigt strain-displacement matrices ``B`` of shape ``(E, n_voigt, (d + 1) d)``.

    Element DOFs are node major, matching the global ``node * d + axis`` numbering.
    """
    n_el, n_nodes, dim = grads.shape
    gx, gy = grads[..., 0], grads[..., 1]
    if dim == 2:
        B = np.zeros((n_el, 3, n_nodes, 2))
        B[:, 0, :, 0] = gx
        B[:, 1, :, 1] = gy
        B[:, 2, :, 0] = gy
        B[:, 2, :, 1] = gx
    else:
        gz = grads[..., 2]
        B = np.zeros((n_el, 6, n_nodes, 3))
        B[:, 0, :, 0] = gx
        B[:, 1, :, 1] = gy
        B[:, 2, :, 2] = gz
        B[:, 3, :, 1] = gz
        B[:, 3, :, 2] = gy
        B[:, 4, :, 0] = gz
        B[:, 4, :, 2] = gx
        B[:, 5, :, 0] = gy
        B[:, 5, :, 1] = gx
    return B.reshape(n_el, B.shape[1], n_nodes * dim)


def element_stiffness(nodes: np.ndarray, elements: np.ndarray, material: Material) -> np.ndarray:
    """Unit-density stiffness ``|D_e| B^T D_0 B`` of every simplex.

    One-point quadrature is exact since the strain is constant per element.

    Returns:
        ``(E, (d + 1) d, (d + 1) d)`` symmetric matrices
    """
    grads, volumes = shape_gradients(nodes, elements)
    B = strain_displacement(grads)
    D = material.elasticity(grads.shape[2])
    k = np.einsum("e,eki,kl,elj->eij", volumes, B, D, B, optimize=True)
    return 0.5 * (k + k.transpose(0, 2, 1))


def element_dofs(elements: np.ndarray, dim: int) -> np.ndarray:
    """Global DOF ids of every element, node major."""
    elements = np.asarray(elements, dtype=np.int64)
    return (elements[:, :, None] * dim + np.arange(dim)).reshape(len(elements), -1)


def element_strains(nodes: np.ndarray, elements: np.ndarray, displacement: np.ndarray) -> np.ndarray:
    """Constant Voigt strains of every element under nodal ``displacement`` ``(V, d)``."""
    grads, _ = shape_gradients(nodes, elements)
    B = strain_displacement(grads)
    q = np.asarray(displacement, dtype=np.float64)[elements].reshape(len(elements), -1)
    return np.einsum("eki,ei->ek", B, q)
