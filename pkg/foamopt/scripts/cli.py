""" Command line interface of foamopt.

    foamopt run --config bridge.yaml [--seeds seeds.json] [--out DIR] [--threads N] [--verify]
    foamopt simulate --config bridge.yaml --seeds seeds.json [--out report.json]
    foamopt export --config bridge.yaml --seeds seeds.json [--resolution H] [--out foam.obj]
    foamopt check-gradients --config bridge.yaml [--seeds seeds.json] [--steps 0.5 1 2] [--out check.csv]

Exit codes: 0 success (``run``: converged), 2 configuration error,
3 solver failure, 4 ``run`` stopped at ``max_iter`` without converging.
"""
import argparse
import logging
import sys
from os.path import basename, dirname, isdir, isfile, splitext
from pathlib import Path
from typing import List, Optional

import yaml

from foamopt.errors import ConfigError, FoamOptError, SolverError
from foamopt.fem import benchmark_compliance, compliance_error
from foamopt.implicit import extract_surface, write_obj
from foamopt.optimize import Optimizer
from foamopt.sensitivity import sample_variables, step_study, write_gradient_check
from foamopt.utils import Config, Output, atomic_write, instantiate, load_file, num_tasks, save_file
from foamopt.utils.versions import check_code_version
from ._build import Setup, criterion_from_config, gcmma_from_config
from ._logger import set_up_script_logger
from .defaults import default_config, validate_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_NOT_CONVERGED = 4

# options that may change when a run is resumed
_RESTART_MUTABLE = ("max_iter", "append", "verbose", "verify", "snapshot_every", "export_resolution")


def parse_command_line(args=None):
    parser = argparse.ArgumentParser(
        prog="foamopt",
        description="Optimize conforming open-cell Voronoi foams for stiffness.",
    )
    parser.add_argument("--log", help="log file to store all the screen logging", type=Path, default=None)
    parser.add_argument("--verbose", help="logging level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds_required: bool = False):
        p.add_argument("--config", help="YAML or JSON file with the problem options", required=True)
        p.add_argument("--seeds", help="seeds JSON file", required=seeds_required, default=None)
        p.add_argument(
            "--threads",
            help="worker threads, falls back to $FOAMOPT_THREADS and then to the available cores",
            type=int,
            default=None,
        )

    p = sub.add_parser("run", help="optimize a foam")
    common(p)
    p.add_argument("--out", help="run directory, default {root}/{run_name} of the config", default=None)
    p.add_argument("--verify", help="check gradients against finite differences during the run", action="store_true")

    p = sub.add_parser("simulate", help="compare coarse and fine compliance of a design")
    common(p, seeds_required=True)
    p.add_argument("--out", help="write the report to this JSON file", default=None)

    p = sub.add_parser("export", help="extract the foam surface of a design")
    common(p, seeds_required=True)
    p.add_argument("--resolution", help="grid spacing, default the fine edge length", type=float, default=None)
    p.add_argument("--out", help="OBJ file to write", default="foam.obj")

    p = sub.add_parser("check-gradients", help="compare assembled gradients with finite differences")
    common(p)
    p.add_argument(
        "--steps", help="finite-difference step factors to study", type=float, nargs="+", default=None
    )
    p.add_argument("--samples", help="number of checked variables, all when omitted", type=int, default=None)
    p.add_argument("--out", help="CSV file of the compared derivatives", default=None)
    return parser.parse_args(args=args)


def load_config(filename: str, log: Optional[Path] = None, verbose: Optional[str] = None, **overrides) -> Config:
    """Read, merge over the defaults and validate; raises ``ConfigError``.

    Without an explicit ``verbose`` the script logger takes the level of the config.
    """
    if not isfile(filename):
        raise ConfigError(f"config file {filename} does not exist")
    try:
        config = Config.from_file(filename, defaults=default_config)
    except (ValueError, TypeError, NotImplementedError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read config {filename}: {e}") from e
    config.update({k: v for k, v in overrides.items() if v is not None})
    validate_config(config)
    if verbose is None:
        set_up_script_logger(None if log is None else str(log), config.verbose)
    return config


def check_restart(config: Config, workdir: str) -> None:
    """A resumed run must keep its options, apart from a few stop and output settings."""
    saved_file = f"{workdir}/config.yaml"
    if not isfile(saved_file):
        raise ConfigError(f"{workdir} exists but holds no config.yaml to resume from")
    saved = load_file(supported_formats=dict(yaml=["yaml"]), filename=saved_file)
    check_code_version(saved)
    for key in config.keys():
        if key in _RESTART_MUTABLE or key.endswith("_version") or key not in saved:
            continue
        if config[key] != saved[key]:
            raise ConfigError(
                f'Key "{key}" is different in the config and the run being resumed '
                f"({config[key]!r} vs {saved[key]!r}); use another run_name"
            )


def checkpoint_seeds(workdir: str) -> int:
    """Number of seeds of the run being resumed."""
    checkpoint = f"{workdir}/checkpoint.json"
    if not isfile(checkpoint):
        raise ConfigError(f"{workdir} holds no checkpoint.json, there is nothing to resume")
    return int(load_file(supported_formats=dict(json=["json"]), filename=checkpoint)["problem"]["n_seeds"])


def echo_config(config: Config, output: Output, filename: str) -> None:
    config.save(output.generate_file("config.yaml", exist_ok=True))
    ext = splitext(filename)[1] or ".yaml"
    with open(filename) as fin, atomic_write(output.generate_file(f"config_input{ext}", exist_ok=True)) as fout:
        fout.write(fin.read())


def cmd_run(args) -> int:
    overrides = {}
    if args.out is not None:
        out = args.out.rstrip("/")
        overrides.update(root=dirname(out) or ".", run_name=basename(out))
    if args.verify:
        overrides["verify"] = True
    config = load_config(args.config, args.log, args.verbose, **overrides)
    workdir = f"{config.root}/{config.run_name}"
    resuming = isdir(workdir)
    if resuming and not config.append:
        raise ConfigError(f"run directory {workdir} exists; set append: true to resume it or use another --out")
    if resuming:
        check_restart(config, workdir)
    else:
        check_code_version(config, add_to_config=True)

    n_threads = num_tasks(args.threads)
    setup = Setup(config, n_threads=n_threads)
    seeds = None
    if not resuming:
        seeds = setup.seeds(args.seeds)
    problem = setup.problem(checkpoint_seeds(workdir) if resuming else seeds.n_seeds)

    output = Output.get_output(dict(config))
    try:
        if not resuming:
            echo_config(config, output, args.config)
        optimizer, _ = instantiate(
            Optimizer,
            positional_args=dict(
                pipeline=setup.pipeline,
                problem=problem,
                output=output,
                gcmma=gcmma_from_config(config),
                criterion=criterion_from_config(config),
            ),
            all_args=config,
        )
        result = optimizer.run(seeds)
    except BaseException:
        if output.fresh and not isfile(f"{output.workdir}/checkpoint.json"):
            output.cleanup()
        else:
            output.close()
        raise

    print(
        f"{'converged' if result.converged else 'not converged'} after {len(result.trace)} iteration(s): "
        f"C = {result.evaluation.compliance:.6g}, V/V0 = {result.evaluation.volume_fraction:.4f}, "
        f"outputs in {output.workdir}"
    )
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_simulate(args) -> int:
    config = load_config(args.config, args.log, args.verbose)
    setup = Setup(config, n_threads=num_tasks(args.threads), simulation="coarse")
    seeds = setup.seeds(args.seeds)
    pipeline = setup.pipeline
    _, _, foam = pipeline.geometry(seeds)

    fine = benchmark_compliance(
        foam, seeds, setup.mesh, setup.loadspec, method=pipeline.solver, assembler=pipeline.assembler
    )
    coarse = pipeline.coarse_system.solve(fine.density, setup.loadspec, pipeline.solver)
    averaged = pipeline.coarse_system.solve_averaged(fine.density, setup.loadspec, pipeline.solver)
    report = dict(
        n_seeds=seeds.n_seeds,
        C_fine=float(fine.compliance),
        C_coarse=float(coarse.compliance),
        r=float(compliance_error(coarse.compliance, fine.compliance)),
        C_averaged=float(averaged.compliance),
        r_averaged=float(compliance_error(averaged.compliance, fine.compliance)),
        seconds_fine=float(fine.seconds),
        seconds_coarse=float(coarse.seconds),
        seconds_averaged=float(averaged.seconds),
        fine_dofs=int(setup.mesh.fine.n_dofs),
        coarse_dofs=int(setup.mesh.n_dofs),
    )
    for key, value in report.items():
        print(f"{key:>16s}: {value:.6g}" if isinstance(value, float) else f"{key:>16s}: {value}")
    if args.out is not None:
        save_file(item=report, supported_formats=dict(json=["json"]), filename=args.out)
    return EXIT_OK


def cmd_export(args) -> int:
    config = load_config(args.config, args.log, args.verbose)
    setup = Setup(config, n_threads=num_tasks(args.threads), simulation="fine")
    seeds = setup.seeds(args.seeds)
    _, _, foam = setup.pipeline.geometry(seeds)
    spacing = setup.l_a if args.resolution is None else args.resolution
    if spacing <= 0:
        raise ConfigError(f"--resolution must be positive, got {spacing}")
    vertices, cells = extract_surface(foam, setup.domain, spacing, r_lo=setup.r_lo)
    write_obj(args.out, vertices, cells)
    print(f"wrote {len(vertices)} vertices and {len(cells)} cells to {args.out}")
    return EXIT_OK


def cmd_check_gradients(args) -> int:
    config = load_config(args.config, args.log, args.verbose)
    setup = Setup(config, n_threads=num_tasks(args.threads))
    seeds = setup.seeds(args.seeds)
    problem = setup.problem(seeds.n_seeds)
    pipeline = setup.pipeline
    variables = sample_variables(
        seeds.n_seeds,
        seeds.dim,
        args.samples,
        seed=int(config["seed"]),
        positions=problem.optimize_positions,
        radii=problem.optimize_radii,
    )
    ev = pipeline.evaluate(seeds, gradients=False)
    if args.steps:
        reports = step_study(
            pipeline.values,
            lambda h: pipeline.gradient(ev, variables, step=h)[0],
            seeds,
            variables,
            args.steps,
            pipeline.l_a,
            shape=pipeline.shape,
            reference_step=pipeline.check_step,
        )
    else:
        reports = [pipeline.check(ev, variables)]
    print(f"{'step':>10s}" + "".join(f"{f'cos_{q}':>10s}{f'rel_{q}':>10s}" for q in "CVS"))
    for report in reports:
        s = report.summary()
        print(f"{s['step']:>10.4g}" + "".join(f"{s[f'cos_{q}']:>10.4f}{s[f'rel_{q}']:>10.2e}" for q in "CVS"))
    if args.out is not None:
        write_gradient_check(args.out, list(enumerate(reports)))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "simulate": cmd_simulate,
    "export": cmd_export,
    "check-gradients": cmd_check_gradients,
}


def main(args: Optional[List[str]] = None) -> int:
    args = parse_command_line(args)
    try:
        set_up_script_logger(None if args.log is None else str(args.log), args.verbose or default_config["verbose"])
    except ValueError as e:
        logging.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    try:
        return COMMANDS[args.command](args)
    except SolverError as e:
        logging.error(f"Solver failure: {e}")
        return EXIT_SOLVER
    except (FoamOptError, OSError) as e:
        logging.error(f"Configuration error: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
