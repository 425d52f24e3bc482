from ._field import segment_distance, beam_phi, ks_union, heaviside, heaviside_derivative
from ._foam import (
    Beam,
    ImplicitFoam,
    LocalFoamEvaluator,
    foam_from_seeds,
    foam_phi,
    shell_and_faces,
)
from ._density import DensityField, node_density, element_mean, sample_density, domain_volume, volume
from ._surface import sample_grid, extract_surface, write_obj

__all__ = [
    segment_distance,
    beam_phi,
    ks_union,
    heaviside,
    heaviside_derivative,
    Beam,
    ImplicitFoam,
    LocalFoamEvaluator,
    foam_from_seeds,
    foam_phi,
    shell_and_faces,
    DensityField,
    node_density,
    element_mean,
    sample_density,
    domain_volume,
    volume,
    sample_grid,
    extract_surface,
    write_obj,
]
