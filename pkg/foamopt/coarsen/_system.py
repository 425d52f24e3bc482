import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np
from scipy import sparse

from foamopt.fem import LoadCase, LoadSpec, Material, StiffnessAssembler, compliance, solve
from foamopt.mesh import CoarseMesh
from ._operators import ElementOperators, boundary_interpolation, composite_transform


class _ElementLayout:
    """Density independent data of one coarse element."""

    def __init__(self, elem, mesh: CoarseMesh, assembler: StiffnessAssembler, check: bool):
        dim = mesh.dim
        fine = mesh.fine
        self.elem = elem
        self.fine_nodes = elem.fine_nodes
        self.global_dofs = (elem.fine_nodes[:, None] * dim + np.arange(dim)).reshape(-1)

        def local(ids):
            return (np.searchsorted(elem.fine_nodes, ids)[:, None] * dim + np.arange(dim)).reshape(-1)

        self.boundary_dofs = local(elem.boundary)
        self.interior_dofs = local(elem.interior)
        self.local_dofs = (
            np.searchsorted(elem.fine_nodes, fine.elements[elem.fine_elements])[:, :, None] * dim + np.arange(dim)
        ).reshape(len(elem.fine_elements), -1)
        nd = self.local_dofs.shape[1]
        self.rows = np.repeat(self.local_dofs, nd, axis=1).ravel()
        self.cols = np.tile(self.local_dofs, (1, nd)).ravel()
        self.k_hat = assembler.k_hat[elem.fine_elements]
        self.psi = boundary_interpolation(elem, fine.nodes, mesh.depth, check=check, l_a=fine.l_a)
        self.coarse_dofs = (elem.node_ids[:, None] * dim + np.arange(dim)).reshape(-1)

    @property
    def n_local(self) -> int:
        return len(self.global_dofs)

    def stiffness(self, values: np.ndarray) -> sparse.csr_matrix:
        data = (values[self.elem.fine_elements, None, None] * self.k_hat).ravel()
        return sparse.coo_matrix((data, (self.rows, self.cols)), shape=(self.n_local, self.n_local)).tocsr()

    def operators(self, values: np.ndarray) -> ElementOperators:
        k_alpha = self.stiffness(values)
        Psi = composite_transform(k_alpha, self.boundary_dofs, self.interior_dofs, self.psi)
        return ElementOperators(
            self.elem, k_alpha, self.psi, Psi, self.boundary_dofs, self.interior_dofs, self.local_dofs, self.coarse_dofs
        )


class CoarseSolution:
    """Result of a coarse solve: coarse displacements, loads and per-element operators."""

    def __init__(self, K: sparse.csr_matrix, loadcase: LoadCase, Q: np.ndarray, operators: List[ElementOperators], seconds: float):
        self.K = K
        self.loadcase = loadcase
        self.Q = Q
        self.operators = operators
        self.seconds = seconds
        self.compliance = compliance(K, Q, loadcase.force if loadcase.homogeneous else None)

    def __repr__(self):
        return f"CoarseSolution(n_dofs={len(self.Q)}, compliance={self.compliance:.6g}, seconds={self.seconds:.2f})"


class CoarseSystem:
    """Coarsened elasticity on a two-level mesh.

    Args:
        mesh: ``foamopt.mesh.CoarseMesh``
        material: defaults to ``Material()``
        assembler: fine assembler to share unit element matrices with
        n_threads: workers building the per-element operators
        check: verify that shared boundary nodes interpolate identically on every face
    """

    def __init__(
        self,
        mesh: CoarseMesh,
        material: Optional[Material] = None,
        assembler: Optional[StiffnessAssembler] = None,
        n_threads: int = 1,
        check: bool = False,
    ):
        self.mesh = mesh
        self.material = material if material is not None else Material()
        self.assembler = assembler if assembler is not None else StiffnessAssembler(mesh.fine, self.material)
        self.n_threads = max(1, int(n_threads))
        self.layouts = [_ElementLayout(e, mesh, self.assembler, check) for e in mesh.elements]
        self.multiplicity = np.bincount(
            np.concatenate([e.fine_nodes for e in mesh.elements]), minlength=mesh.fine.n_nodes
        ).astype(np.float64)
        # coarse element and local slot of every fine element, -1 when discarded
        self.owner = np.full(mesh.fine.n_elements, -1, dtype=np.int64)
        self.slot = np.full(mesh.fine.n_elements, -1, dtype=np.int64)
        for a, e in enumerate(mesh.elements):
            self.owner[e.fine_elements] = a
            self.slot[e.fine_elements] = np.arange(len(e.fine_elements))
        self._homogeneous = None
        logging.debug(f"coarse system with {mesh.n_dofs} DOFs over {mesh.n_elements} elements")

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_dofs

    def element_operators(self, density) -> List[ElementOperators]:
        values = np.asarray(getattr(density, "values", density), dtype=np.float64)
        if values.ndim == 0:
            values = np.full(self.mesh.fine.n_elements, float(values))
        if self.n_threads == 1:
            return [lay.operators(values) for lay in self.layouts]
        with ThreadPoolExecutor(max_workers=self.n_threads) as pool:
            return list(pool.map(lambda lay: lay.operators(values), self.layouts))

    def assemble(self, operators: List[ElementOperators], scales: Optional[np.ndarray] = None) -> sparse.csr_matrix:
        """Global coarse stiffness from the element ``K^alpha``, optionally rescaled per element."""
        rows, cols, data = [], [], []
        for a, ops in enumerate(operators):
            m = len(ops.coarse_dofs)
            rows.append(np.repeat(ops.coarse_dofs, m))
            cols.append(np.tile(ops.coarse_dofs, m))
            K = ops.K_alpha if scales is None else scales[a] * ops.K_alpha
            data.append(K.ravel())
        n = self.n_dofs
        return sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        ).tocsr()

    def coarse_force(self, force: np.ndarray, operators: List[ElementOperators]) -> np.ndarray:
        """``F^H = sum_alpha Psi^T f^alpha``, fine loads on shared nodes split evenly."""
        dim = self.mesh.dim
        share = np.repeat(self.multiplicity, dim)
        F = np.zeros(self.n_dofs)
        for lay, ops in zip(self.layouts, operators):
            f_alpha = force[lay.global_dofs] / share[lay.global_dofs]
            if np.any(f_alpha):
                np.add.at(F, ops.coarse_dofs, ops.Psi.T @ f_alpha)
        return F

    def _solve(self, K, operators, loadspec: LoadSpec, method: str, start: float) -> CoarseSolution:
        force = loadspec.force(self.mesh.fine)
        loadcase = loadspec.coarse(self.mesh, self.coarse_force(force, operators))
        Q = solve(K, loadcase, points=self.mesh.nodes, method=method)
        return CoarseSolution(K, loadcase, Q, operators, time.perf_counter() - start)

    def solve(self, density, loadspec: LoadSpec, method: str = "auto") -> CoarseSolution:
        start = time.perf_counter()
        operators = self.element_operators(density)
        solution = self._solve(self.assemble(operators), operators, loadspec, method, start)
        logging.debug(f"coarse solve: {solution!r}")
        return solution

    def element_densities(self, density) -> np.ndarray:
        """Volume weighted mean density of every coarse element."""
        values = np.asarray(getattr(density, "values", density), dtype=np.float64)
        vol = self.mesh.fine.volumes
        return np.array(
            [np.sum(values[e.fine_elements] * vol[e.fine_elements]) / np.sum(vol[e.fine_elements]) for e in self.mesh.elements]
        )

    def solve_averaged(self, density, loadspec: LoadSpec, method: str = "auto") -> CoarseSolution:
        """Baseline: homogeneous coarse stiffness scaled by the mean element density."""
        start = time.perf_counter()
        if self._homogeneous is None:
            self._homogeneous = self.element_operators(1.0)
        K = self.assemble(self._homogeneous, scales=self.element_densities(density))
        return self._solve(K, self._homogeneous, loadspec, method, start)

    def element_fields(self, Q: np.ndarray, operators: List[ElementOperators]):
        """Yield ``(layout, q^alpha)`` with the local fine displacements of every element."""
        for lay, ops in zip(self.layouts, operators):
            yield lay, ops.fine_displacement(Q[ops.coarse_dofs])

    def prolong(self, Q: np.ndarray, operators: List[ElementOperators]) -> np.ndarray:
        """Fine displacement field, averaged over the elements sharing a fine node."""
        q = np.zeros(self.mesh.fine.n_dofs)
        for lay, q_alpha in self.element_fields(Q, operators):
            np.add.at(q, lay.global_dofs, q_alpha)
        return q / np.repeat(self.multiplicity, self.mesh.dim)

    def element_energies(self, Q: np.ndarray, operators: List[ElementOperators]) -> np.ndarray:
        """``q_e^T k_e q_e`` of every fine element, ``q`` taken from its own coarse element."""
        energies = np.zeros(self.mesh.fine.n_elements)
        for lay, q_alpha in self.element_fields(Q, operators):
            q = q_alpha[lay.local_dofs]
            energies[lay.elem.fine_elements] = np.einsum("ei,eij,ej->e", q, lay.k_hat, q)
        return energies


def prolong(system: CoarseSystem, Q: np.ndarray, operators: List[ElementOperators]) -> np.ndarray:
    return system.prolong(Q, operators)
