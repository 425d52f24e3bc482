import json
from os.path import isfile

import numpy as np
import pytest

from foamopt.mesh import build_structured
from foamopt.optimize import (
    ConvergenceCriterion,
    FoamPipeline,
    Optimizer,
    build_problem,
    centroid_drift,
    init_seeds,
    run,
)
from foamopt.utils import Output


@pytest.fixture(scope="module")
def pipeline(unit_square, square_mesh, cantilever, material):
    return FoamPipeline(
        unit_square, square_mesh.fine, cantilever, material, simulation="fine", shell=True, shell_thickness=0.1
    )


@pytest.fixture(scope="module")
def problem(unit_square, pipeline):
    return build_problem(unit_square, n_seeds=8, l_a=pipeline.l_a, V0=pipeline.V0, v=0.4)


def optimizer(pipeline, problem, root, run_name, max_iter, append=False, **kwargs):
    output = Output(root=str(root), run_name=run_name, append=append)
    return Optimizer(pipeline, problem, output, criterion=ConvergenceCriterion(max_iter=max_iter), **kwargs)


def test_zero_iterations(pipeline, problem, seeds2d, tmp_path):
    result = optimizer(pipeline, problem, tmp_path, "zero", 0).run(seeds2d)
    assert len(result.trace) == 1
    assert not result.converged
    assert result.stop_arg == "max iterations"
    start = problem.clamp(seeds2d)
    assert np.allclose(result.seeds.positions, start.positions)
    assert np.allclose(result.seeds.radii, start.radii)
    for name in ("seeds", "density", "surface", "summary"):
        assert isfile(result.exports[name])
    with open(result.exports["summary"]) as f:
        summary = json.load(f)
    assert summary["iterations"] == 1
    assert summary["C"] == pytest.approx(summary["C0"])


def test_short_run(pipeline, problem, seeds2d, tmp_path):
    opt = optimizer(pipeline, problem, tmp_path, "short", 2, snapshot_every=1)
    result = opt.run(seeds2d)
    assert len(result.trace) == 3
    assert result.trace.column("iter").tolist() == [0, 1, 2]
    assert np.all(result.trace.column("ch") == 1.0)
    workdir = tmp_path / "short"
    for name in ("log", "convergence.csv", "checkpoint.json", "density_0000.vtk", "density_0001.vtk", "foam.obj"):
        assert (workdir / name).is_file()
    with open(workdir / "convergence.csv") as f:
        lines = f.read().splitlines()
    assert lines[0].startswith("iter, C")
    assert len(lines) == 4
    x = problem.encode(result.seeds)
    assert np.all((x >= 0.0) & (x <= 1.0))


def test_restart(pipeline, problem, seeds2d, tmp_path):
    optimizer(pipeline, problem, tmp_path, "resume", 1).run(seeds2d)
    resumed = optimizer(pipeline, problem, tmp_path, "resume", 3, append=True)
    result = resumed.run()
    assert result.trace.column("iter").tolist() == [0, 1, 2, 3]


def test_needs_seeds(pipeline, problem, tmp_path):
    with pytest.raises(ValueError, match="initial seeds"):
        optimizer(pipeline, problem, tmp_path, "none", 1).run()


def test_seed_count_mismatch(pipeline, problem, seeds2d, tmp_path):
    few = seeds2d.replace(positions=seeds2d.positions[:3], radii=seeds2d.radii[:3])
    with pytest.raises(ValueError, match="do not match"):
        optimizer(pipeline, problem, tmp_path, "few", 1).run(few)


def test_verify(pipeline, problem, seeds2d, tmp_path):
    opt = optimizer(pipeline, problem, tmp_path, "verify", 0, verify=True, verify_samples=2)
    opt.run(seeds2d)
    with open(tmp_path / "verify" / "gradient_check.csv") as f:
        lines = f.read().splitlines()
    assert lines[0] == "iteration, variable, quantity, assembled, finite_difference"
    assert len(lines) == 1 + 3 * 2


@pytest.mark.parametrize(
    "kwargs",
    [dict(snapshot_every=-1), dict(verify_every=0), dict(export_resolution=0.0), dict(centroidal_tol=0.0)],
)
def test_invalid(pipeline, problem, tmp_path, kwargs):
    with pytest.raises(ValueError):
        optimizer(pipeline, problem, tmp_path, "invalid", 1, **kwargs)


def test_run_builds_the_pipeline(pipeline, problem, seeds2d, tmp_path, unit_square, square_mesh, cantilever, material):
    result = run(
        problem,
        square_mesh.fine,
        unit_square,
        cantilever,
        simulation="fine",
        seeds=seeds2d,
        output=Output(root=str(tmp_path), run_name="function"),
        pipeline_kwargs=dict(material=material, shell=True, shell_thickness=0.1),
        criterion=ConvergenceCriterion(max_iter=0),
    )
    assert len(result.trace) == 1
    expected = pipeline.evaluate(problem.clamp(seeds2d), gradients=False)
    assert result.evaluation.compliance == pytest.approx(expected.compliance, rel=1e-10)
    assert isfile(str(tmp_path / "function" / "summary.json"))


def test_pure_shape_mode(unit_square, cantilever, material, tmp_path):
    """With w = 1 the seeds relax towards a centroidal tessellation."""
    fine = build_structured(unit_square, [5, 5], refine=8, depth=2).fine
    pipeline = FoamPipeline(
        unit_square, fine, cantilever, material, simulation="fine", shell=True, shell_thickness=0.05
    )
    problem = build_problem(
        unit_square, n_seeds=100, l_a=pipeline.l_a, V0=pipeline.V0, w=1.0, optimize_radii=False
    )
    seeds = init_seeds(unit_square, 100, seed=3)
    opt = optimizer(pipeline, problem, tmp_path, "cvt", 80, snapshot_every=0)
    result = opt.run(seeds)
    S = result.trace.column("S")
    assert len(S) > 2
    assert np.mean(np.diff(S) < 0.0) >= 0.9
    assert centroid_drift(result.evaluation) <= 0.05 * opt.l_cell
    # radii are left alone and the volume bound is not enforced
    assert np.allclose(result.seeds.radii, problem.clamp(seeds).radii)
    assert result.evaluation.gradient is None
