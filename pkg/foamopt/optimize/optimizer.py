""" GCMMA optimization loop of a Voronoi foam with checkpoints and exports

Each iteration rebuilds the foam of the current seeds, rasterizes its density,
solves the (coarsened) elasticity problem, evaluates ``C``, ``S``, ``J`` and
``V / V_0`` with their derivatives and takes one GCMMA step on the normalized
design vector. With ``w = 1`` the compliance and volume are only recorded and every
step moves the seeds onto the centroids of their cells (gradient descent on
``S`` with step 1/2), which is Lloyd relaxation.

Files written into the run directory:

- ``log``: human readable log
- ``convergence.csv``: one row per iteration
- ``checkpoint.json``: state for restarts
- ``density_XXXX.vtk`` / ``density_final.vtk``: snapshots of the density
- ``seeds.json``, ``foam.obj``, ``summary.json``: final design
- ``gradient_check.csv``: assembled vs finite-difference derivatives (``verify``)
"""
import inspect
import logging
from collections import OrderedDict
from os.path import isfile
from time import perf_counter
from typing import Dict, Optional, Tuple

import numpy as np

from foamopt.errors import SolverError
from foamopt.implicit import extract_surface, write_obj
from foamopt.mesh import write_vtk
from foamopt.sensitivity import sample_variables
from foamopt.utils import Output, atomic_write_group, load_file, save_file
from foamopt.voronoi import SeedSet
from ._convergence import ConvergenceCriterion, volume_error
from ._pipeline import Evaluation, FoamPipeline
from ._problem import OptProblem, OptTrace, cell_length
from .gcmma import GCMMA

# relative excess of the volume fraction still accepted as feasible
FEASIBILITY_RTOL = 1e-3


def centroid_drift(ev: Evaluation) -> float:
    """Largest distance between a seed and the centroid of its cell."""
    if not ev.valid.any():
        return 0.0
    delta = ev.seeds.positions[ev.valid] - ev.centroids[ev.valid]
    return float(np.linalg.norm(delta, axis=1).max())


class OptResult:
    """Outcome of ``Optimizer.run``."""

    def __init__(
        self,
        seeds: SeedSet,
        trace: OptTrace,
        converged: bool,
        stop_arg: str,
        evaluation: Evaluation,
        exports: Dict[str, str],
        wall: float,
    ):
        self.seeds = seeds
        self.trace = trace
        self.converged = converged
        self.stop_arg = stop_arg
        self.evaluation = evaluation
        self.exports = exports
        self.wall = wall

    def __repr__(self):
        return (
            f"OptResult(iterations={len(self.trace)}, converged={self.converged}, "
            f"stop='{self.stop_arg}', C={self.evaluation.compliance:.6g}, "
            f"V_frac={self.evaluation.volume_fraction:.4f})"
        )


class Optimizer:
    """Class to optimize the seeds of a Voronoi foam

    Args:
        pipeline: evaluation of designs
        problem: bounds, weights and variable groups
        output: run directory
        gcmma: optimizer state and settings, default ``GCMMA()``
        criterion: stop condition, default ``ConvergenceCriterion()``
        snapshot_every: density VTK every this many iterations, 0 for the final one only
        export_resolution: grid spacing of the final surface, default the fine edge length
        verify: compare assembled and finite-difference derivatives during the run
        verify_samples: number of variables checked
        verify_every: iterations between gradient checks
        seed: seed of the random generator choosing the checked variables
        inner_evaluations: conservative GCMMA inner iterations (one forward solve each)
        centroidal_tol: with ``w = 1`` stop once every seed is within this many mean cell sizes of its centroid
    """

    def __init__(
        self,
        pipeline: FoamPipeline,
        problem: OptProblem,
        output: Output,
        gcmma: Optional[GCMMA] = None,
        criterion: Optional[ConvergenceCriterion] = None,
        snapshot_every: int = 10,
        export_resolution: Optional[float] = None,
        verify: bool = False,
        verify_samples: int = 6,
        verify_every: int = 10,
        seed: int = 0,
        inner_evaluations: bool = True,
        centroidal_tol: float = 0.01,
    ):
        logging.debug("* Initialize Optimizer")
        if snapshot_every < 0 or verify_every < 1 or verify_samples < 1:
            raise ValueError("snapshot_every must be >= 0, verify_every and verify_samples >= 1")
        if export_resolution is not None and export_resolution <= 0:
            raise ValueError(f"export_resolution must be positive, got {export_resolution}")
        if centroidal_tol <= 0:
            raise ValueError(f"centroidal_tol must be positive, got {centroidal_tol}")

        self.pipeline = pipeline
        self.problem = problem
        self.output = output
        self.gcmma = GCMMA() if gcmma is None else gcmma
        self.criterion = ConvergenceCriterion() if criterion is None else criterion
        for key in self.init_keys:
            setattr(self, key, locals()[key])

        self.logfile = output.open_logfile("log", propagate=True)
        self.convergence_log = output.open_logfile("convergence.csv", propagate=False)
        self.gradient_log = output.open_logfile("gradient_check.csv", propagate=False) if verify else None
        self.checkpoint_path = output.generate_file("checkpoint.json", exist_ok=True)

        self.rng = np.random.default_rng(seed)
        self.trace = OptTrace()
        self.iteration = 0
        self.x = None
        self.base = None
        self.C0 = None
        self.best = None
        self.stop_arg = None
        self.cumulative_wall = 0.0
        self.n_evaluations = 0
        self.l_cell = cell_length(pipeline.V0, problem.n_seeds, problem.dim)
        self.S_scale = problem.n_seeds * self.l_cell**2

    @property
    def init_keys(self):
        return [
            key
            for key in inspect.signature(Optimizer.__init__).parameters.keys()
            if key not in ["self", "pipeline", "problem", "output", "gcmma", "criterion"]
        ]

    @property
    def logger(self):
        return logging.getLogger(self.logfile)

    @property
    def shape_only(self) -> bool:
        return self.problem.w == 1.0

    def as_dict(self) -> dict:
        dictionary = {key: getattr(self, key) for key in self.init_keys}
        dictionary["problem"] = self.problem.as_dict()
        dictionary["max_iter"] = self.criterion.max_iter
        return dictionary

    # objective and constraint

    def objective(self, ev: Evaluation) -> Tuple[float, float]:
        """``J = (1 - w) C / C_0 + w S / (N_s l_cell^2)`` and ``g = V / (v V_0) - 1``."""
        w = self.problem.w
        J = (1.0 - w) * ev.compliance / self.C0 + w * ev.shape / self.S_scale
        g = ev.volume_fraction / self.problem.v - 1.0
        return J, g

    def objective_gradient(self, ev: Evaluation) -> Tuple[np.ndarray, np.ndarray]:
        """Gradients of ``J`` and ``g`` with respect to the normalized design vector."""
        p = self.problem
        groups = dict(positions=p.optimize_positions, radii=p.optimize_radii)
        dJ = (1.0 - p.w) / self.C0 * ev.gradient.pack("C", **groups) + p.w / self.S_scale * ev.gradient.pack(
            "S", **groups
        )
        dg = ev.gradient.pack("V", **groups) / (p.v * self.pipeline.V0)
        return p.scale_gradient(dJ), p.scale_gradient(dg)

    def trial(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        """Objective and constraint at a trial point of the GCMMA inner loop."""
        self.n_evaluations += 1
        ev = self.pipeline.evaluate(self.problem.decode(x, self.base), gradients=False)
        J, g = self.objective(ev)
        return J, np.array([g])

    def feasible(self, volume_fraction: float) -> bool:
        return volume_error(volume_fraction, self.problem.v) <= FEASIBILITY_RTOL

    # state

    def state_dict(self) -> "OrderedDict[str, object]":
        return OrderedDict(
            [
                ("iteration", self.iteration),
                ("x", self.x.tolist()),
                ("base", self.base.as_dict()),
                ("C0", self.C0),
                ("best", self.best),
                ("cumulative_wall", self.cumulative_wall),
                ("rng", self.rng.bit_generator.state),
                ("gcmma", self.gcmma.state_dict()),
                ("criterion", self.criterion.state_dict()),
                ("trace", self.trace.state_dict()),
                ("problem", self.problem.as_dict()),
            ]
        )

    def load_state_dict(self, state_dict: dict) -> None:
        if state_dict["problem"] != self.problem.as_dict():
            logging.warning("Checkpoint was written for different problem settings, the stored design is used anyway")
        self.iteration = int(state_dict["iteration"])
        self.x = np.asarray(state_dict["x"], dtype=np.float64)
        self.base = SeedSet.from_dict(state_dict["base"])
        self.C0 = state_dict["C0"]
        self.best = state_dict["best"]
        self.cumulative_wall = float(state_dict["cumulative_wall"])
        self.rng.bit_generator.state = state_dict["rng"]
        self.gcmma.load_state_dict(state_dict["gcmma"])
        self.criterion.load_state_dict(state_dict["criterion"])
        self.trace.load_state_dict(state_dict["trace"])

    def save(self) -> str:
        return save_file(item=self.state_dict(), supported_formats=dict(json=["json"]), filename=self.checkpoint_path)

    def restart(self) -> bool:
        """Load ``checkpoint.json`` of an appended run directory; False when there is none."""
        if not (self.output.append and isfile(self.checkpoint_path)):
            return False
        self.load_state_dict(load_file(supported_formats=dict(json=["json"]), filename=self.checkpoint_path))
        if len(self.trace) and int(self.trace[-1]["iter"]) == self.iteration:
            # the stopping iteration is evaluated again when the run resumes
            self.trace.records.pop()
            self.criterion.objective = self.criterion.objective[:-1]
        return True

    # loop

    def init_log(self, restarted: bool):
        if restarted:
            self.logger.info(f"! Restarting optimization at iteration {self.iteration} ...")
        else:
            self.logger.info("! Starting optimization ...")
            logging.getLogger(self.convergence_log).info(OptTrace.header())
            if self.gradient_log is not None:
                logging.getLogger(self.gradient_log).info(
                    "iteration, variable, quantity, assembled, finite_difference"
                )
        self.logger.info(f"{self.problem!r}")

    def final_log(self):
        self.logger.info(f"! Stop optimization: {self.stop_arg}")
        wall = perf_counter() - self.wall
        self.cumulative_wall = wall + self.previous_cumulative_wall
        self.logger.info(f"Wall time: {wall}")
        self.logger.info(f"Cumulative wall time: {self.cumulative_wall}")
        self.logger.info(f"J: {self.trace.sparkline('J')}")

    def end_of_iteration_log(self, record: dict):
        logging.getLogger(self.convergence_log).info(OptTrace.row(record))
        self.logger.info(
            f"{record['iter']:5d}  C {record['C']:.6e}  S {record['S']:.4e}  J {record['J']:.6f}  "
            f"V/V0 {record['V_frac']:.4f}  ch {record['ch']:.3e}  ({record['seconds']:.1f} s)"
        )

    def verify_gradients(self, ev: Evaluation):
        p = self.problem
        variables = sample_variables(
            p.n_seeds,
            p.dim,
            self.verify_samples,
            seed=int(self.rng.integers(2**31)),
            positions=p.optimize_positions,
            radii=p.optimize_radii,
        )
        report = self.pipeline.check(ev, variables)
        logger = logging.getLogger(self.gradient_log)
        for row in report.rows(self.iteration):
            logger.info(", ".join(f"{v:.10g}" if isinstance(v, float) else str(v) for v in row))
        return report

    def snapshot(self, ev: Evaluation, name: str) -> str:
        point_data = {"phi": ev.density.phi, "density": ev.density.node_values}
        fine = self.pipeline.fine
        if ev.solution is not None:
            q = self.pipeline.coarse_system.prolong(ev.Q, ev.solution.operators)
        else:
            q = ev.Q
        point_data["displacement"] = np.asarray(q).reshape(fine.n_nodes, fine.dim)
        return write_vtk(
            self.output.generate_file(name, exist_ok=True),
            fine,
            cell_data={"density": ev.density.values},
            point_data=point_data,
            title=f"foamopt iteration {self.iteration}",
        )

    def step(self) -> Tuple[Evaluation, bool]:
        """Evaluate the current design, record it and decide whether to stop."""
        k = self.iteration
        seeds = self.problem.decode(self.x, self.base)
        ev = self.pipeline.evaluate(seeds, gradients=not self.shape_only, variables=self.problem.variables)
        self.n_evaluations += 1
        if self.C0 is None:
            if not (np.isfinite(ev.compliance) and ev.compliance > 0):
                raise SolverError(f"initial compliance {ev.compliance} is not positive, do the loads do work?")
            self.C0 = float(ev.compliance)
        J, g = self.objective(ev)
        ch, stop, reason = self.criterion(k, J, ev.volume_fraction, self.problem.v)
        if self.shape_only and not stop:
            drift = centroid_drift(ev)
            if drift <= self.centroidal_tol * self.l_cell:
                stop, reason = True, f"seeds within {drift:.3e} of their centroids"
        record = self.trace.append(
            iter=k,
            C=ev.compliance,
            S=ev.shape,
            J=J,
            V_frac=ev.volume_fraction,
            ch=ch,
            seconds=ev.seconds,
            flagged=ev.flagged,
        )
        self.end_of_iteration_log(record)
        if self.feasible(ev.volume_fraction) and (self.best is None or J < self.best["J"]):
            self.best = dict(J=J, iteration=k, seeds=seeds.as_dict())

        if self.verify and k % self.verify_every == 0:
            self.verify_gradients(ev)
        if self.snapshot_every > 0 and k % self.snapshot_every == 0:
            self.snapshot(ev, f"density_{k:04d}.vtk")
        if stop:
            self.stop_arg = reason
        return ev, stop

    def update(self, ev: Evaluation):
        """One GCMMA step from the current design, or one Lloyd step with ``w = 1``."""
        if self.shape_only:
            positions = ev.seeds.positions - 0.5 * ev.shape_gradient
            self.x = self.problem.encode(ev.seeds.replace(positions=positions))
            self.iteration += 1
            return
        J, g = self.objective(ev)
        dJ, dg = self.objective_gradient(ev)
        p = self.problem
        self.x = self.gcmma.step(
            self.x,
            p.lower,
            p.upper,
            J,
            dJ,
            np.array([g]),
            dg[None, :],
            evaluate=self.trial if self.inner_evaluations else None,
        )
        self.iteration += 1

    def run(self, seeds: Optional[SeedSet] = None) -> OptResult:
        """Optimize from ``seeds``, or from the checkpoint of a restarted run."""
        restarted = self.restart()
        if not restarted:
            if seeds is None:
                raise ValueError("initial seeds are required unless the run restarts from a checkpoint")
            if seeds.n_seeds != self.problem.n_seeds or seeds.dim != self.problem.dim:
                raise ValueError(
                    f"{seeds.n_seeds} seeds in {seeds.dim}D do not match the problem "
                    f"({self.problem.n_seeds} in {self.problem.dim}D)"
                )
            self.base = self.problem.clamp(seeds)
            self.x = self.problem.encode(self.base)

        self.init_log(restarted)
        self.wall = perf_counter()
        self.previous_cumulative_wall = self.cumulative_wall

        while True:
            try:
                ev, stop = self.step()
            except SolverError:
                self.dump_failure()
                raise
            if stop:
                break
            self.update(ev)
            self.save()

        self.final_log()
        converged = self.stop_arg != "max iterations"
        ev = self.final_design(ev)
        with atomic_write_group():
            exports = self.export(ev, converged)
            self.save()
        self.output.close()
        return OptResult(ev.seeds, self.trace, converged, self.stop_arg, ev, exports, self.cumulative_wall)

    def dump_failure(self):
        """Keep the failing design next to the last checkpoint."""
        path = self.output.generate_file("failed_seeds.json", exist_ok=True)
        self.problem.decode(self.x, self.base).save(path)
        self.logger.error(f"! Solver failure at iteration {self.iteration}; design written to {path}")

    def final_design(self, ev: Evaluation) -> Evaluation:
        if self.shape_only:
            return ev
        if self.feasible(ev.volume_fraction) or self.best is None:
            if not self.feasible(ev.volume_fraction):
                self.logger.warning(f"Final design violates the volume bound: V/V0 = {ev.volume_fraction:.4f}")
            return ev
        self.logger.warning(
            f"Last iterate is infeasible (V/V0 = {ev.volume_fraction:.4f}), "
            f"returning the best feasible design of iteration {self.best['iteration']}"
        )
        return self.pipeline.evaluate(SeedSet.from_dict(self.best["seeds"]), gradients=False)

    def export(self, ev: Evaluation, converged: bool) -> Dict[str, str]:
        exports = {}
        exports["seeds"] = ev.seeds.save(self.output.generate_file("seeds.json", exist_ok=True))
        exports["density"] = self.snapshot(ev, "density_final.vtk")
        spacing = self.pipeline.l_a if self.export_resolution is None else self.export_resolution
        vertices, cells = extract_surface(ev.foam, self.pipeline.domain, spacing, r_lo=self.problem.r_lo)
        exports["surface"] = write_obj(self.output.generate_file("foam.obj", exist_ok=True), vertices, cells)
        J, _ = self.objective(ev)
        summary = dict(
            C=float(ev.compliance),
            C0=float(self.C0),
            S=float(ev.shape),
            J=float(J),
            V_frac=float(ev.volume_fraction),
            v=self.problem.v,
            iterations=len(self.trace),
            evaluations=self.n_evaluations,
            converged=bool(converged),
            stop=self.stop_arg,
            wall=self.cumulative_wall,
        )
        exports["summary"] = save_file(
            item=summary,
            supported_formats=dict(json=["json"]),
            filename=self.output.generate_file("summary.json", exist_ok=True),
        )
        self.logger.info(f"Exported {', '.join(sorted(exports))} to {self.output.workdir}")
        return exports


def run(
    problem: OptProblem,
    mesh,
    domain,
    loadspec,
    simulation: str = "coarse",
    seeds: Optional[SeedSet] = None,
    output: Optional[Output] = None,
    pipeline_kwargs: Optional[dict] = None,
    **kwargs,
) -> OptResult:
    """Build the pipeline and the optimizer and run them; extra ``kwargs`` go to ``Optimizer``."""
    pipeline = FoamPipeline(domain, mesh, loadspec, simulation=simulation, **(pipeline_kwargs or {}))
    if output is None:
        output = Output(root=".", run_name="foamopt_run", append=False)
    return Optimizer(pipeline, problem, output, **kwargs).run(seeds)
