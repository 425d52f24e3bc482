from typing import Tuple

import numpy as np

from ._field import heaviside


class DensityField:
    """Regularized densities of a fine mesh.

    Args:
        values: ``(E,)`` element densities ``H_e``
        node_values: ``(V,)`` vertex densities
        node_mask: ``(V,)`` smoothed domain indicator of the vertices
        alpha: void density
        phi: ``(V,)`` foam field at the vertices
    """

    def __init__(self, values, node_values, node_mask, alpha: float, phi=None):
        self.values = np.asarray(values, dtype=np.float64)
        self.node_values = np.asarray(node_values, dtype=np.float64)
        self.node_mask = np.asarray(node_mask, dtype=np.float64)
        self.alpha = float(alpha)
        self.phi = phi

    def __len__(self):
        return self.values.shape[0]

    def __repr__(self):
        return f"DensityField(n_elements={len(self)}, mean={self.values.mean():.4g})"


def node_density(phi, domain_phi, eps: float, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Vertex densities ``alpha + (H(phi) - alpha) m`` and the domain mask ``m``."""
    mask = heaviside(domain_phi, eps, 0.0)
    return alpha + (heaviside(phi, eps, alpha) - alpha) * mask, mask


def element_mean(node_values: np.ndarray, elements: np.ndarray) -> np.ndarray:
    return node_values[elements].mean(axis=1)


def sample_density(mesh, foam) -> DensityField:
    """Rasterize ``foam`` onto the fine ``mesh``: element density is the vertex mean."""
    phi = foam.phi(mesh.nodes)
    node_values, mask = node_density(phi, mesh.node_domain_phi, foam.eps, foam.alpha)
    return DensityField(
        element_mean(node_values, mesh.elements), node_values, mask, foam.alpha, phi=phi
    )


def domain_volume(mesh, eps: float) -> float:
    """Measure of the domain on the fine mesh, ``sum |D_e| chi_e``."""
    mask = heaviside(mesh.node_domain_phi, eps, 0.0)
    return float(np.sum(mesh.volumes * element_mean(mask, mesh.elements)))


def volume(density: DensityField, mesh) -> Tuple[float, float]:
    """Material volume ``V`` and the fraction ``V / V_0``."""
    chi = element_mean(density.node_mask, mesh.elements)
    measure = mesh.volumes * chi
    v0 = float(measure.sum())
    v = float(np.sum(density.values * measure))
    return v, (v / v0 if v0 > 0 else 0.0)
