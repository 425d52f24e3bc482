from ._barycentric import (
    segment_coordinates,
    face_frame,
    mean_value_coordinates,
    polygon_coordinates,
)
from ._spatch import multinomial, SPatchBasis, spatch_eval
from ._operators import (
    INTERPOLATION_ATOL,
    boundary_weights,
    boundary_interpolation,
    schur_transform,
    composite_transform,
    coarse_stiffness,
    coarse_gradient,
    ElementOperators,
)
from ._system import CoarseSystem, CoarseSolution, prolong

__all__ = [
    segment_coordinates,
    face_frame,
    mean_value_coordinates,
    polygon_coordinates,
    multinomial,
    SPatchBasis,
    spatch_eval,
    INTERPOLATION_ATOL,
    boundary_weights,
    boundary_interpolation,
    schur_transform,
    composite_transform,
    coarse_stiffness,
    coarse_gradient,
    ElementOperators,
    CoarseSystem,
    CoarseSolution,
    prolong,
]
