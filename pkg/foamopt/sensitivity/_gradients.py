from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from foamopt.coarsen import coarse_gradient
from foamopt.implicit import element_mean
from ._density import DensityJacobianSlice


def compliance_gradient(
    slices: Sequence[DensityJacobianSlice],
    energies: np.ndarray,
    incidence: sparse.csc_matrix,
) -> np.ndarray:
    """``dC/da = -1/2 sum_e dH_e/da q_e^T k_e q_e`` for every slice.

    ``energies`` are the unit-density element energies ``q_e^T k_e q_e`` of the
    fine solution.
    """
    out = np.zeros(len(slices))
    for n, s in enumerate(slices):
        elements, dHe = s.element_values(incidence)
        out[n] = -0.5 * float(np.dot(dHe, energies[elements]))
    return out


def coarse_compliance_gradient(
    slices: Sequence[DensityJacobianSlice],
    system,
    Q: np.ndarray,
    operators: Sequence,
    incidence: sparse.csc_matrix,
) -> np.ndarray:
    """``dC/da = -1/2 sum_alpha Q^alpha^T dK^alpha/da Q^alpha`` on a coarse system.

    Only the coarse elements owning a fine element of the slice are visited.

    Args:
        system: ``foamopt.coarsen.CoarseSystem`` the solution comes from
        Q: coarse displacements
        operators: element operators of the solve
        incidence: element-vertex averaging matrix of the fine mesh
    """
    out = np.zeros(len(slices))
    for n, s in enumerate(slices):
        elements, dHe = s.element_values(incidence)
        owner = system.owner[elements]
        kept = owner >= 0
        elements, dHe, owner = elements[kept], dHe[kept], owner[kept]
        total = 0.0
        for a in np.unique(owner):
            lay, ops = system.layouts[a], operators[a]
            local = np.zeros(len(lay.elem.fine_elements))
            here = owner == a
            local[system.slot[elements[here]]] = dHe[here]
            Q_alpha = Q[ops.coarse_dofs]
            total += float(Q_alpha @ coarse_gradient(ops, local, lay.k_hat) @ Q_alpha)
        out[n] = -0.5 * total
    return out


def element_measure(mesh, density) -> np.ndarray:
    """``|D_e| chi_e``: element volumes weighted by the smoothed domain indicator."""
    return mesh.volumes * element_mean(density.node_mask, mesh.elements)


def volume_gradient(
    slices: Sequence[DensityJacobianSlice],
    measure: np.ndarray,
    incidence: sparse.csc_matrix,
) -> np.ndarray:
    """``dV/da = sum_e |D_e| chi_e dH_e/da`` for every slice."""
    out = np.zeros(len(slices))
    for n, s in enumerate(slices):
        elements, dHe = s.element_values(incidence)
        out[n] = float(np.dot(dHe, measure[elements]))
    return out


def shape_energy_and_gradient(
    positions: np.ndarray,
    centroids: np.ndarray,
    valid: Optional[np.ndarray] = None,
    weights: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """``S = sum_i w_i |X_i - X_i^c|^2`` and ``dS/dX = 2 w_i (X_i - X_i^c)`` with frozen centroids.

    Seeds without a valid centroid (cells outside the domain) do not contribute.
    """
    positions = np.asarray(positions, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    if valid is None:
        valid = np.all(np.isfinite(centroids), axis=1)
    w = np.ones(len(positions)) if weights is None else np.asarray(weights, dtype=np.float64)
    delta = np.where(valid[:, None], positions - np.where(valid[:, None], centroids, 0.0), 0.0)
    S = float(np.sum(w * np.sum(delta**2, axis=1)))
    return S, 2.0 * w[:, None] * delta


class GradientVector:
    """Derivatives of compliance, volume and shape energy in every seed variable.

    Args:
        dC_dX, dV_dX, dS_dX: ``(N_s, d)``
        dC_dr, dV_dr: ``(N_s,)``
    """

    def __init__(self, dC_dX, dC_dr, dV_dX, dV_dr, dS_dX):
        self.dC_dX = np.asarray(dC_dX, dtype=np.float64)
        self.dC_dr = np.asarray(dC_dr, dtype=np.float64)
        self.dV_dX = np.asarray(dV_dX, dtype=np.float64)
        self.dV_dr = np.asarray(dV_dr, dtype=np.float64)
        self.dS_dX = np.asarray(dS_dX, dtype=np.float64)

    @property
    def n_seeds(self) -> int:
        return self.dC_dX.shape[0]

    @property
    def dim(self) -> int:
        return self.dC_dX.shape[1]

    @classmethod
    def from_slices(
        cls,
        slices: List[DensityJacobianSlice],
        dC: np.ndarray,
        dV: np.ndarray,
        dS_dX: np.ndarray,
    ) -> "GradientVector":
        """Scatter per-slice derivatives to the seed layout; missing variables are 0."""
        n_seeds, dim = dS_dX.shape
        out = {name: np.zeros(n_seeds * (dim + 1)) for name in ("C", "V")}
        for s, c, v in zip(slices, dC, dV):
            out["C"][s.variable] = c
            out["V"][s.variable] = v
        split = n_seeds * dim
        return cls(
            out["C"][:split].reshape(n_seeds, dim),
            out["C"][split:],
            out["V"][:split].reshape(n_seeds, dim),
            out["V"][split:],
            dS_dX,
        )

    def pack(self, quantity: str, positions: bool = True, radii: bool = True) -> np.ndarray:
        """Derivative of ``C``, ``V`` or ``S`` in the ``(X flattened, r)`` variable order."""
        if quantity == "C":
            dX, dr = self.dC_dX, self.dC_dr
        elif quantity == "V":
            dX, dr = self.dV_dX, self.dV_dr
        elif quantity == "S":
            dX, dr = self.dS_dX, np.zeros(self.n_seeds)
        else:
            raise ValueError(f"Unknown quantity `{quantity}`, choose C, V or S")
        parts = []
        if positions:
            parts.append(dX.reshape(-1))
        if radii:
            parts.append(dr)
        return np.concatenate(parts) if parts else np.zeros(0)

    def __repr__(self):
        return (
            f"GradientVector(n_seeds={self.n_seeds}, |dC|={np.linalg.norm(self.pack('C')):.3e}, "
            f"|dV|={np.linalg.norm(self.pack('V')):.3e}, |dS|={np.linalg.norm(self.dS_dX):.3e})"
        )
