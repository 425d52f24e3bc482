from ._guard import GUARD_RTOL, cospherical, differentiability_guard
from ._density import (
    DensityJacobianSlice,
    DensitySensitivity,
    decode_variable,
    variable_index,
    vertex_incidence,
    density_derivative,
)
from ._gradients import (
    GradientVector,
    coarse_compliance_gradient,
    compliance_gradient,
    element_measure,
    volume_gradient,
    shape_energy_and_gradient,
)
from ._check import (
    NOISE_FLOOR,
    GradientCheckReport,
    sample_variables,
    finite_difference_gradient,
    cosine_similarity,
    relative_error,
    check_gradients,
    step_study,
    write_gradient_check,
)

__all__ = [
    GUARD_RTOL,
    cospherical,
    differentiability_guard,
    DensityJacobianSlice,
    DensitySensitivity,
    decode_variable,
    variable_index,
    vertex_incidence,
    density_derivative,
    GradientVector,
    coarse_compliance_gradient,
    compliance_gradient,
    element_measure,
    volume_gradient,
    shape_energy_and_gradient,
    NOISE_FLOOR,
    GradientCheckReport,
    sample_variables,
    finite_difference_gradient,
    cosine_similarity,
    relative_error,
    check_gradients,
    step_study,
    write_gradient_check,
]
