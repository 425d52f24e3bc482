from .gcmma import GCMMA, gcmma_step, subsolve
from ._convergence import ConvergenceCriterion, convergence_check, volume_error, window_change
from ._problem import TRACE_FIELDS, OptProblem, OptTrace, build_problem, cell_length
from ._pipeline import SIMULATIONS, Evaluation, FoamPipeline
from ._seeding import STRATEGIES, calibrate_radius, init_seeds, sample_blue_noise, sample_uniform
from .optimizer import FEASIBILITY_RTOL, OptResult, Optimizer, centroid_drift, run

__all__ = [
    GCMMA,
    gcmma_step,
    subsolve,
    ConvergenceCriterion,
    convergence_check,
    volume_error,
    window_change,
    TRACE_FIELDS,
    OptProblem,
    OptTrace,
    build_problem,
    cell_length,
    SIMULATIONS,
    Evaluation,
    FoamPipeline,
    STRATEGIES,
    calibrate_radius,
    init_seeds,
    sample_blue_noise,
    sample_uniform,
    FEASIBILITY_RTOL,
    OptResult,
    Optimizer,
    centroid_drift,
    run,
]
