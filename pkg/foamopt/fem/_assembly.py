import logging
from typing import Optional, Union

import numpy as np
from scipy import sparse

from ._element import element_dofs, element_stiffness
from ._material import Material


class StiffnessAssembler:
    """Global stiffness ``K = sum_e H_e k_e`` of a fine mesh.

    Unit-density element matrices and the sparsity pattern are computed once;
    every ``assemble`` call only rescales and sums. The COO to CSR conversion
    sums duplicates in a fixed order, so results do not depend on threading.

    Args:
        mesh: ``foamopt.mesh.FineMesh``
        material: ``foamopt.fem.Material``
    """

    def __init__(self, mesh, material: Material):
        self.mesh = mesh
        self.material = material
        self.dim = mesh.dim
        self.k_hat = element_stiffness(mesh.nodes, mesh.elements, material)
        self.dofs = element_dofs(mesh.elements, self.dim)
        n = self.dofs.shape[1]
        self._rows = np.repeat(self.dofs, n, axis=1).ravel()
        self._cols = np.tile(self.dofs, (1, n)).ravel()
        self.n_dofs = mesh.n_nodes * self.dim
        logging.debug(
            f"stiffness pattern with {len(self._rows)} entries over {self.n_dofs} DOFs"
        )

    def assemble(self, density) -> sparse.csr_matrix:
        values = _density_values(density, len(self.k_hat))
        data = (values[:, None, None] * self.k_hat).ravel()
        K = sparse.coo_matrix((data, (self._rows, self._cols)), shape=(self.n_dofs, self.n_dofs))
        return K.tocsr()

    def element_energies(self, Q: np.ndarray) -> np.ndarray:
        """``q_e^T k_e q_e`` of every element at unit density."""
        q = np.asarray(Q, dtype=np.float64).reshape(-1)[self.dofs]
        return np.einsum("ei,eij,ej->e", q, self.k_hat, q)


def _density_values(density, n_elements: int) -> np.ndarray:
    values = np.asarray(getattr(density, "values", density), dtype=np.float64)
    if values.ndim == 0:
        values = np.full(n_elements, float(values))
    if values.shape != (n_elements,):
        raise ValueError(f"density has shape {values.shape}, the mesh has {n_elements} elements")
    return values


def assemble(
    density: Union[np.ndarray, float, object],
    mesh,
    material: Optional[Material] = None,
    assembler: Optional[StiffnessAssembler] = None,
) -> sparse.csr_matrix:
    """Assemble the stiffness of ``mesh`` scaled by element densities.

    Args:
        density: a ``DensityField``, an ``(E,)`` array or a scalar
        mesh: fine mesh
        material: defaults to ``Material()``
        assembler: reuse a precomputed assembler
    """
    if assembler is None:
        assembler = StiffnessAssembler(mesh, material if material is not None else Material())
    return assembler.assemble(density)
