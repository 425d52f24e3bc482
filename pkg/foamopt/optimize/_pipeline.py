"""Forward and sensitivity evaluation of a foam design: geometry, density,
simulation, volume, shape energy and their derivatives."""
import logging
import time
from typing import Optional, Sequence, Tuple

import numpy as np

from foamopt.coarsen import CoarseSystem
from foamopt.fem import Material, LoadSpec, StiffnessAssembler, compliance, solve
from foamopt.implicit import DensityField, domain_volume, foam_from_seeds, sample_density, volume
from foamopt.mesh import CoarseMesh
from foamopt.sensitivity import (
    DensitySensitivity,
    GradientCheckReport,
    GradientVector,
    check_gradients,
    coarse_compliance_gradient,
    compliance_gradient,
    element_measure,
    shape_energy_and_gradient,
    volume_gradient,
)
from foamopt.voronoi import CentroidQuadrature, SeedSet, margin_box

SIMULATIONS = ("coarse", "fine")


class Evaluation:
    """Everything computed for one design."""

    def __init__(
        self,
        seeds: SeedSet,
        full_graph,
        graph,
        foam,
        density: DensityField,
        compliance: float,
        volume: float,
        volume_fraction: float,
        shape: float,
        shape_gradient: np.ndarray,
        centroids: np.ndarray,
        valid: np.ndarray,
        Q: np.ndarray,
        energies: np.ndarray,
        seconds: float,
        gradient: Optional[GradientVector] = None,
        flagged: int = 0,
        solution=None,
    ):
        self.seeds = seeds
        self.full_graph = full_graph
        self.graph = graph
        self.foam = foam
        self.density = density
        self.compliance = compliance
        self.volume = volume
        self.volume_fraction = volume_fraction
        self.shape = shape
        self.shape_gradient = shape_gradient
        self.centroids = centroids
        self.valid = valid
        self.Q = Q
        self.energies = energies
        self.seconds = seconds
        self.gradient = gradient
        self.flagged = flagged
        self.solution = solution

    def __repr__(self):
        return (
            f"Evaluation(C={self.compliance:.6g}, V_frac={self.volume_fraction:.4f}, S={self.shape:.4g}, "
            f"n_beams={self.graph.n_edges}, seconds={self.seconds:.2f})"
        )


class FoamPipeline:
    """Maps seeds to compliance, volume and shape energy, with derivatives.

    Args:
        domain: design domain
        mesh: two-level mesh; a ``FineMesh`` is accepted for ``simulation="fine"``
        loadspec: boundary conditions
        material: defaults to ``Material()``
        simulation: ``coarse`` (coarsened elasticity) or ``fine`` (full fine-mesh FEM)
        p: KS sharpness
        eps_factor: Heaviside half-bandwidth in units of the fine edge length
        alpha: void density
        ks_tol: KS term cut-off weight
        shell: add a shell along the domain boundary
        shell_thickness: shell thickness, required with ``shell``
        boundary_faces: add face ribs along the domain boundary
        fd_step_factor: finite-difference step in units of the fine edge length
        check_step_factor: step of gradient checks in units of the fine edge length
        three_point: use the three-point approximation in the local derivatives
        guard: forward differences near critical Voronoi configurations
        solver: linear solver method of ``foamopt.fem.solve``
        n_threads: worker threads for coarse operators and sensitivities
        check_interpolation: verify matching boundary interpolation of coarse faces
    """

    def __init__(
        self,
        domain,
        mesh,
        loadspec: LoadSpec,
        material: Optional[Material] = None,
        simulation: str = "coarse",
        p: float = 16.0,
        eps_factor: float = 1.5,
        alpha: float = 1e-6,
        ks_tol: float = 1e-6,
        shell: bool = False,
        shell_thickness: Optional[float] = None,
        boundary_faces: bool = False,
        fd_step_factor: float = 1.0,
        check_step_factor: float = 0.1,
        three_point: bool = True,
        guard: bool = True,
        solver: str = "auto",
        n_threads: int = 1,
        check_interpolation: bool = False,
    ):
        if simulation not in SIMULATIONS:
            raise ValueError(f"simulation must be one of {SIMULATIONS}, got `{simulation}`")
        if simulation == "coarse" and not isinstance(mesh, CoarseMesh):
            raise ValueError("the coarse simulation needs a two-level CoarseMesh")
        if eps_factor <= 0 or fd_step_factor <= 0 or check_step_factor <= 0:
            raise ValueError("eps_factor, fd_step_factor and check_step_factor must be positive")
        self.domain = domain
        self.mesh = mesh
        self.fine = getattr(mesh, "fine", mesh)
        self.loadspec = loadspec
        self.material = material if material is not None else Material()
        self.simulation = simulation
        self.l_a = self.fine.l_a
        self.foam_kwargs = dict(
            eps=eps_factor * self.l_a,
            p=p,
            alpha=alpha,
            ks_tol=ks_tol,
            shell=shell,
            shell_thickness=shell_thickness,
            boundary_faces=boundary_faces,
        )
        self.step = fd_step_factor * self.l_a
        self.check_step = check_step_factor * self.l_a
        self.three_point = three_point
        self.guard = guard
        self.solver = solver
        self.n_threads = max(1, int(n_threads))
        self.box = margin_box(*domain.bbox())

        self.assembler = StiffnessAssembler(self.fine, self.material)
        self.quadrature = CentroidQuadrature(self.fine, domain)
        self.V0 = domain_volume(self.fine, self.eps)
        self.coarse_system = None
        self.fine_loadcase = None
        if simulation == "coarse":
            self.coarse_system = CoarseSystem(
                mesh, self.material, self.assembler, n_threads=self.n_threads, check=check_interpolation
            )
        else:
            self.fine_loadcase = loadspec.fine(self.fine)
        logging.info(
            f"Pipeline: {simulation} simulation on {self.fine!r}, eps = {self.foam_kwargs['eps']:.4g}, "
            f"step = {self.step:.4g}"
        )

    @property
    def eps(self) -> float:
        return self.foam_kwargs["eps"]

    def geometry(self, seeds: SeedSet):
        """``(unclipped graph, clipped graph, foam)`` of ``seeds``."""
        return foam_from_seeds(seeds, self.domain, self.box, self.l_a, **self.foam_kwargs)

    def simulate(self, density: DensityField) -> Tuple[float, np.ndarray, np.ndarray, object]:
        """``(C, Q, element energies, solution)`` of ``density``.

        On the coarse path the element energies come from every coarse
        element's own fine displacement field.
        """
        if self.simulation == "coarse":
            solution = self.coarse_system.solve(density, self.loadspec, self.solver)
            energies = self.coarse_system.element_energies(solution.Q, solution.operators)
            return solution.compliance, solution.Q, energies, solution
        K = self.assembler.assemble(density)
        loadcase = self.fine_loadcase
        Q = solve(K, loadcase, points=self.fine.nodes, method=self.solver)
        C = compliance(K, Q, loadcase.force if loadcase.homogeneous else None)
        return C, Q, self.assembler.element_energies(Q), None

    def volume_fraction(self, seeds: SeedSet) -> float:
        """``V / V_0`` of ``seeds`` without a simulation."""
        _, _, foam = self.geometry(seeds)
        return volume(sample_density(self.fine, foam), self.fine)[1]

    def values(self, seeds: SeedSet) -> Tuple[float, float]:
        """Compliance and material volume of ``seeds``."""
        _, _, foam = self.geometry(seeds)
        density = sample_density(self.fine, foam)
        C = self.simulate(density)[0]
        return C, volume(density, self.fine)[0]

    def shape(self, seeds: SeedSet) -> float:
        """Shape energy of ``seeds`` with their own cell centroids."""
        centroids, valid = self.quadrature.centroids(seeds.positions)
        return shape_energy_and_gradient(seeds.positions, centroids, valid)[0]

    def check(
        self,
        evaluation: "Evaluation",
        variables: Sequence[int],
        step: Optional[float] = None,
    ) -> GradientCheckReport:
        """Assembled derivatives of ``variables`` against global central differences.

        Both sides use ``step`` (default ``check_step``); the shape energy is
        differenced over one fine edge length since centroids only move when a
        quadrature point changes cell.
        """
        step = self.check_step if step is None else float(step)
        gradient, _ = self.gradient(evaluation, variables, step)
        return check_gradients(
            self.values, evaluation.seeds, gradient, variables, step, shape=self.shape, shape_step=self.l_a
        )

    def sensitivity(self, seeds: SeedSet, full_graph, graph, foam, step: Optional[float] = None) -> DensitySensitivity:
        return DensitySensitivity(
            seeds,
            full_graph,
            graph,
            foam,
            self.fine,
            self.domain,
            self.box,
            self.l_a,
            step=self.step if step is None else step,
            three_point=self.three_point,
            guard=self.guard,
            n_threads=self.n_threads,
        )

    def gradient(
        self,
        evaluation: "Evaluation",
        variables: Optional[Sequence[int]] = None,
        step: Optional[float] = None,
    ) -> Tuple[GradientVector, int]:
        """Assembled derivatives of ``evaluation``; returns the gradient and the flagged variable count."""
        e = evaluation
        sens = self.sensitivity(e.seeds, e.full_graph, e.graph, e.foam, step)
        slices = sens.slices(variables)
        if e.solution is not None:
            dC = coarse_compliance_gradient(slices, self.coarse_system, e.Q, e.solution.operators, sens.incidence)
        else:
            dC = compliance_gradient(slices, e.energies, sens.incidence)
        dV = volume_gradient(slices, element_measure(self.fine, e.density), sens.incidence)
        flagged = sum(1 for s in slices if s.flagged)
        return GradientVector.from_slices(slices, dC, dV, e.shape_gradient), flagged

    def evaluate(
        self,
        seeds: SeedSet,
        gradients: bool = True,
        variables: Optional[Sequence[int]] = None,
    ) -> Evaluation:
        start = time.perf_counter()
        full, graph, foam = self.geometry(seeds)
        density = sample_density(self.fine, foam)
        V, frac = volume(density, self.fine)
        C, Q, energies, solution = self.simulate(density)
        centroids, valid = self.quadrature.centroids(seeds.positions)
        S, dS = shape_energy_and_gradient(seeds.positions, centroids, valid)
        evaluation = Evaluation(
            seeds, full, graph, foam, density, C, V, frac, S, dS, centroids, valid, Q, energies, 0.0, solution=solution
        )
        if gradients:
            evaluation.gradient, evaluation.flagged = self.gradient(evaluation, variables)
        evaluation.seconds = time.perf_counter() - start
        logging.debug(f"{evaluation!r}")
        return evaluation
