from ._material import Material
from ._element import (
    shape_gradients,
    strain_displacement,
    element_stiffness,
    element_dofs,
    element_strains,
)
from ._assembly import StiffnessAssembler, assemble
from ._loads import (
    Selector,
    LoadCase,
    LoadSpec,
    boundary_facets,
    facet_measures,
    loadcase_from_config,
)
from ._solve import (
    RESIDUAL_RTOL,
    rigid_modes,
    unconstrained_modes,
    solve,
    compliance,
    compliance_error,
)
from ._benchmark import LinearSystem, BenchmarkResult, benchmark_compliance

__all__ = [
    Material,
    shape_gradients,
    strain_displacement,
    element_stiffness,
    element_dofs,
    element_strains,
    StiffnessAssembler,
    assemble,
    Selector,
    LoadCase,
    LoadSpec,
    boundary_facets,
    facet_measures,
    loadcase_from_config,
    RESIDUAL_RTOL,
    rigid_modes,
    unconstrained_modes,
    solve,
    compliance,
    compliance_error,
    LinearSystem,
    BenchmarkResult,
    benchmark_compliance,
]
