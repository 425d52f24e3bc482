"""Default options of the command line and their validation."""
import logging
from os.path import isfile
from typing import Iterable

from foamopt.errors import ConfigError
from foamopt.optimize import SIMULATIONS, STRATEGIES

SOLVERS = ("auto", "direct", "cg")

default_config = dict(
    root="./results",
    run_name="foamopt",
    append=False,
    verbose="INFO",
    seed=0,
    # design
    n_seeds=60,
    init_strategy="uniform",
    seeds_file=None,
    w=0.1,
    v=0.3,
    optimize_positions=True,
    optimize_radii=True,
    design_margin=0.25,
    radius_min_factor=2.0,
    radius_max=None,
    # geometry and density
    p=16.0,
    eps_factor=1.5,
    alpha=1e-6,
    ks_tol=1e-6,
    shell=False,
    shell_thickness=None,
    boundary_faces=False,
    # mesh
    mesh_file=None,
    coarse_res=[4, 4],
    refine=8,
    depth=2,
    face_controls=True,
    # simulation
    simulation="coarse",
    solver="auto",
    check_interpolation=False,
    material_young=1.0,
    material_poisson=0.3,
    material_plane="stress",
    # sensitivities
    fd_step_factor=1.0,
    check_step_factor=0.1,
    three_point=True,
    guard=True,
    # optimizer
    max_iter=200,
    convergence_tol=1e-3,
    convergence_window=5,
    convergence_volume_tol=1e-4,
    inner_evaluations=True,
    centroidal_tol=0.01,
    # outputs
    snapshot_every=10,
    export_resolution=None,
    verify=False,
    verify_samples=6,
    verify_every=10,
)


def _check(condition: bool, message: str, problems: list):
    if not condition:
        problems.append(message)


def _number(config, key: str) -> float:
    try:
        return float(config[key])
    except (TypeError, ValueError):
        raise ConfigError(f"`{key}` must be a number, got {config[key]!r}")


def _integer(config, key: str) -> int:
    value = config[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"`{key}` must be an integer, got {value!r}")
    return int(value)


def _positive_counts(value) -> Iterable[int]:
    values = value if isinstance(value, (list, tuple)) else [value]
    return [int(v) for v in values if isinstance(v, (int, float)) and not isinstance(v, bool) and int(v) == v]


def validate_config(config) -> None:
    """Raise ``ConfigError`` listing every invalid option of ``config``.

    Only values are checked here; builders check the nested ``domain`` and
    ``loadcase`` entries.
    """
    problems = []
    for key in ("domain", "loadcase"):
        _check(config.get(key, None) is not None, f"`{key}` is required", problems)

    n_seeds = _integer(config, "n_seeds")
    _check(n_seeds >= 1, f"n_seeds must be >= 1, got {n_seeds}", problems)
    v, w = _number(config, "v"), _number(config, "w")
    _check(0.0 < v <= 1.0, f"v must be in (0, 1], got {v}", problems)
    _check(0.0 <= w <= 1.0, f"w must be in [0, 1], got {w}", problems)
    for key in (
        "p", "eps_factor", "fd_step_factor", "check_step_factor", "radius_min_factor", "convergence_tol",
        "centroidal_tol",
    ):
        _check(_number(config, key) > 0, f"{key} must be positive, got {config[key]}", problems)
    alpha = _number(config, "alpha")
    _check(0.0 < alpha < 1.0, f"alpha must be in (0, 1), got {alpha}", problems)
    ks_tol = _number(config, "ks_tol")
    _check(0.0 < ks_tol < 1.0, f"ks_tol must be in (0, 1), got {ks_tol}", problems)
    _check(_number(config, "design_margin") >= 0, "design_margin must not be negative", problems)
    _check(_number(config, "convergence_volume_tol") >= 0, "convergence_volume_tol must not be negative", problems)
    for key in ("radius_max", "shell_thickness", "export_resolution"):
        if config.get(key, None) is not None:
            _check(_number(config, key) > 0, f"{key} must be positive, got {config[key]}", problems)

    _check(_integer(config, "max_iter") >= 0, "max_iter must not be negative", problems)
    _check(_integer(config, "convergence_window") >= 1, "convergence_window must be >= 1", problems)
    _check(_integer(config, "snapshot_every") >= 0, "snapshot_every must not be negative", problems)
    _check(_integer(config, "verify_samples") >= 1, "verify_samples must be >= 1", problems)
    _check(_integer(config, "verify_every") >= 1, "verify_every must be >= 1", problems)
    _check(_integer(config, "refine") >= 2, "refine must be >= 2", problems)
    _check(_integer(config, "depth") >= 1, "depth must be >= 1", problems)
    _integer(config, "seed")

    counts = config["coarse_res"]
    valid_counts = _positive_counts(counts)
    n_counts = len(counts) if isinstance(counts, (list, tuple)) else 1
    _check(
        len(valid_counts) == n_counts and all(c >= 1 for c in valid_counts),
        f"coarse_res must be a positive integer or a list of them, got {counts!r}",
        problems,
    )

    for key, choices in (
        ("simulation", SIMULATIONS),
        ("init_strategy", STRATEGIES),
        ("solver", SOLVERS),
        ("material_plane", ("stress", "strain")),
    ):
        _check(config[key] in choices, f"{key} must be one of {choices}, got {config[key]!r}", problems)
    _check(
        config["optimize_positions"] or config["optimize_radii"],
        "at least one of optimize_positions / optimize_radii must be true",
        problems,
    )
    for key in ("seeds_file", "mesh_file"):
        if config.get(key, None) is not None:
            _check(isfile(str(config[key])), f"{key} `{config[key]}` does not exist", problems)
    _check("/" not in str(config["run_name"]), "run_name must not contain `/`", problems)
    _check(
        isinstance(getattr(logging, str(config["verbose"]).upper(), None), int),
        f"verbose must be a logging level name, got {config['verbose']!r}",
        problems,
    )

    if problems:
        raise ConfigError("Invalid configuration:\n  " + "\n  ".join(problems))
