"""Objects of a run built from a flat config."""
import logging
from typing import Optional

from foamopt.domain import domain_from_config
from foamopt.errors import ConfigError
from foamopt.fem import Material, loadcase_from_config
from foamopt.mesh import build_structured, read_mesh_json
from foamopt.optimize import ConvergenceCriterion, FoamPipeline, GCMMA, OptProblem, build_problem, init_seeds
from foamopt.utils import instantiate
from foamopt.voronoi import SeedSet


class Setup:
    """Domain, mesh, boundary conditions and evaluation pipeline of one config."""

    def __init__(self, config, n_threads: int = 1, simulation: Optional[str] = None):
        self.config = config
        self.domain = domain_from_config(config)
        self.mesh = mesh_from_config(config, self.domain)
        self.loadspec = loadcase_from_config(config)
        self.material, _ = instantiate(Material, prefix="material", all_args=config)
        self.l_a = self.mesh.fine.l_a
        self.r_lo = float(config["radius_min_factor"]) * self.l_a

        positional = dict(
            domain=self.domain,
            mesh=self.mesh,
            loadspec=self.loadspec,
            material=self.material,
            n_threads=n_threads,
        )
        if config.get("shell", False) and config.get("shell_thickness", None) is None:
            positional["shell_thickness"] = 2.0 * self.r_lo
        if simulation is not None:
            positional["simulation"] = simulation
        self.pipeline, _ = instantiate(FoamPipeline, prefix="pipeline", positional_args=positional, all_args=config)

    def problem(self, n_seeds: Optional[int] = None) -> OptProblem:
        positional = dict(domain=self.domain, l_a=self.l_a, V0=self.pipeline.V0)
        if n_seeds is not None:
            positional["n_seeds"] = n_seeds
        problem, _ = instantiate(build_problem, positional_args=positional, all_args=self.config)
        return problem

    def seeds(self, seeds_file: Optional[str] = None) -> SeedSet:
        """Seeds from ``seeds_file`` (or the ``seeds_file`` option), else a sampled initial design."""
        seeds_file = seeds_file if seeds_file is not None else self.config.get("seeds_file", None)
        if seeds_file is not None:
            try:
                seeds = SeedSet.load(seeds_file)
            except (ValueError, KeyError, TypeError) as e:
                raise ConfigError(f"cannot read seeds from {seeds_file}: {e}") from e
            if seeds.dim != self.domain.dim:
                raise ConfigError(f"{seeds_file} holds {seeds.dim}D seeds for a {self.domain.dim}D domain")
            logging.info(f"Loaded {seeds.n_seeds} seeds from {seeds_file}")
            return seeds
        problem = self.problem()
        return init_seeds(
            self.domain,
            problem.n_seeds,
            seed=int(self.config["seed"]),
            strategy=self.config["init_strategy"],
            volume_fraction=self.pipeline.volume_fraction,
            target=problem.v,
            r_lo=problem.r_lo,
            r_hi=problem.r_hi,
            bbox_lo=problem.bbox_lo,
            bbox_hi=problem.bbox_hi,
        )


def mesh_from_config(config, domain):
    """Two-level mesh from ``mesh_file`` or a structured grid of ``coarse_res`` cells refined ``refine`` times."""
    depth, face_controls = int(config["depth"]), bool(config["face_controls"])
    if config.get("mesh_file", None) is not None:
        return read_mesh_json(config["mesh_file"], domain, depth=depth, face_controls=face_controls)
    try:
        return build_structured(domain, config["coarse_res"], int(config["refine"]), depth, face_controls)
    except ValueError as e:
        raise ConfigError(f"Cannot build the structured mesh: {e}") from e


def gcmma_from_config(config) -> GCMMA:
    gcmma, _ = instantiate(GCMMA, prefix="gcmma", all_args=config)
    return gcmma


def criterion_from_config(config) -> ConvergenceCriterion:
    criterion, _ = instantiate(ConvergenceCriterion, prefix="convergence", all_args=config)
    return criterion
