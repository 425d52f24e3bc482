import logging
import time
from typing import Optional

import numpy as np

from foamopt.implicit import sample_density
from ._assembly import StiffnessAssembler
from ._loads import LoadCase, LoadSpec
from ._material import Material
from ._solve import compliance, compliance_error, solve


class LinearSystem:
    """Stiffness, load and solution of one solve."""

    def __init__(self, K, loadcase: LoadCase, Q: np.ndarray):
        self.K = K
        self.loadcase = loadcase
        self.Q = Q

    @property
    def f(self) -> np.ndarray:
        return self.loadcase.force

    def compliance(self) -> float:
        return compliance(self.K, self.Q, self.f if self.loadcase.homogeneous else None)


class BenchmarkResult:
    """Fine-mesh compliance ``C_b`` of a foam, with its error against a reference."""

    def __init__(self, compliance: float, system: LinearSystem, density, seconds: float, error: Optional[float] = None):
        self.compliance = compliance
        self.system = system
        self.density = density
        self.seconds = seconds
        self.error = error

    def __repr__(self):
        err = "" if self.error is None else f", error={self.error:.3e}"
        return f"BenchmarkResult(compliance={self.compliance:.6g}, seconds={self.seconds:.2f}{err})"


def benchmark_compliance(
    foam,
    seeds,
    mesh,
    loadcase,
    material: Optional[Material] = None,
    reference: Optional[float] = None,
    method: str = "auto",
    assembler: Optional[StiffnessAssembler] = None,
) -> BenchmarkResult:
    """Full fine-mesh FEM of the density field of ``foam``, without coarsening.

    Args:
        foam: ``foamopt.implicit.ImplicitFoam`` to rasterize
        seeds: the seeds of ``foam``, logged with the result
        mesh: fine mesh, or a coarse mesh whose fine mesh is used
        loadcase: ``LoadSpec`` or a ``LoadCase`` already resolved on the fine mesh
        reference: compliance to compare against with ``compliance_error``
    """
    fine = getattr(mesh, "fine", mesh)
    start = time.perf_counter()
    if isinstance(loadcase, LoadSpec):
        loadcase = loadcase.fine(fine)
    if assembler is None:
        assembler = StiffnessAssembler(fine, material if material is not None else Material())
    density = sample_density(fine, foam)
    K = assembler.assemble(density)
    Q = solve(K, loadcase, points=fine.nodes, method=method)
    system = LinearSystem(K, loadcase, Q)
    c = system.compliance()
    seconds = time.perf_counter() - start
    error = None if reference is None else compliance_error(c, reference)
    result = BenchmarkResult(c, system, density, seconds, error)
    n_seeds = "?" if seeds is None else len(seeds)
    logging.info(f"benchmark of {n_seeds} seeds on {fine.n_elements} elements: {result!r}")
    return result
