import csv
import json
import pathlib
import subprocess

import numpy as np
import pytest
import yaml
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from foamopt.domain import Box
from foamopt.voronoi import SeedSet, clip, margin_box, tessellate

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED = 0, 2, 4


def foamopt(*args, cwd):
    return subprocess.run(
        ["foamopt", *[str(a) for a in args]],
        cwd=cwd,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
    )


def write_config(CONFIG_ROOT, tmpdir, name="conf.yaml", base="minimal.yaml", **changes):
    config = yaml.load((CONFIG_ROOT / base).read_text(), Loader=yaml.Loader)
    config.update(changes)
    path = pathlib.Path(tmpdir) / name
    with open(path, "w") as fp:
        yaml.dump(config, fp)
    return path


@pytest.fixture(scope="module")
def zero_run(CONFIG_ROOT, tmp_path_factory):
    """A run of the minimal problem that stops right after evaluating the initial design."""
    tmpdir = tmp_path_factory.mktemp("zero_run")
    config = write_config(CONFIG_ROOT, tmpdir, max_iter=0)
    retcode = foamopt("run", "--config", config, "--out", tmpdir / "run", cwd=tmpdir)
    return tmpdir, config, retcode


def test_zero_iterations(zero_run):
    tmpdir, _, retcode = zero_run
    assert retcode.returncode == EXIT_NOT_CONVERGED, retcode.stderr.decode()
    workdir = tmpdir / "run"
    for name in (
        "log",
        "config.yaml",
        "config_input.yaml",
        "checkpoint.json",
        "convergence.csv",
        "seeds.json",
        "summary.json",
        "density_final.vtk",
        "foam.obj",
    ):
        assert (workdir / name).is_file(), f"{name} missing"
    summary = json.loads((workdir / "summary.json").read_text())
    assert summary["iterations"] == 1
    assert not summary["converged"]
    seeds = json.loads((workdir / "seeds.json").read_text())
    assert len(seeds["positions"]) == 6


def test_existing_run_dir(zero_run):
    tmpdir, config, _ = zero_run
    retcode = foamopt("run", "--config", config, "--out", tmpdir / "run", cwd=tmpdir)
    assert retcode.returncode == EXIT_CONFIG
    assert b"append" in retcode.stderr


def test_resume(CONFIG_ROOT, tmp_path):
    config = write_config(CONFIG_ROOT, tmp_path, max_iter=1)
    retcode = foamopt("run", "--config", config, "--out", tmp_path / "run", cwd=tmp_path)
    assert retcode.returncode == EXIT_NOT_CONVERGED, retcode.stderr.decode()
    config = write_config(CONFIG_ROOT, tmp_path, max_iter=2, append=True)
    retcode = foamopt("run", "--config", config, "--out", tmp_path / "run", cwd=tmp_path)
    assert retcode.returncode == EXIT_NOT_CONVERGED, retcode.stderr.decode()
    lines = (tmp_path / "run" / "convergence.csv").read_text().splitlines()
    assert lines[0].startswith("iter")
    assert lines[-1].startswith("2,")
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary["iterations"] == 3


def test_resume_with_other_settings(CONFIG_ROOT, tmp_path):
    config = write_config(CONFIG_ROOT, tmp_path, max_iter=0)
    foamopt("run", "--config", config, "--out", tmp_path / "run", cwd=tmp_path)
    config = write_config(CONFIG_ROOT, tmp_path, max_iter=2, append=True, v=0.4)
    retcode = foamopt("run", "--config", config, "--out", tmp_path / "run", cwd=tmp_path)
    assert retcode.returncode == EXIT_CONFIG


@pytest.mark.parametrize(
    "changes",
    [
        dict(v=1.5),
        dict(n_seeds=0),
        dict(simulation="medium"),
        dict(verbose="chatty"),
        dict(domain={"type": "torus"}),
        dict(seeds_file="does_not_exist.json"),
    ],
)
def test_bad_config(CONFIG_ROOT, tmp_path, changes):
    config = write_config(CONFIG_ROOT, tmp_path, **changes)
    retcode = foamopt("run", "--config", config, "--out", tmp_path / "run", cwd=tmp_path)
    assert retcode.returncode == EXIT_CONFIG
    assert not (tmp_path / "run").exists()


def test_missing_config(tmp_path):
    retcode = foamopt("run", "--config", tmp_path / "nope.yaml", cwd=tmp_path)
    assert retcode.returncode == EXIT_CONFIG


def test_simulate(zero_run):
    tmpdir, config, _ = zero_run
    report_file = tmpdir / "report.json"
    retcode = foamopt(
        "simulate", "--config", config, "--seeds", tmpdir / "run" / "seeds.json", "--out", report_file, cwd=tmpdir
    )
    assert retcode.returncode == EXIT_OK, retcode.stderr.decode()
    report = json.loads(report_file.read_text())
    assert report["n_seeds"] == 6
    assert 0 < report["C_coarse"] <= report["C_fine"] * (1 + 1e-8)
    assert report["r"] >= 0.0
    assert report["coarse_dofs"] < report["fine_dofs"]


def test_export(zero_run):
    tmpdir, config, _ = zero_run
    obj = tmpdir / "exported.obj"
    retcode = foamopt("export", "--config", config, "--seeds", tmpdir / "run" / "seeds.json", "--out", obj, cwd=tmpdir)
    assert retcode.returncode == EXIT_OK, retcode.stderr.decode()
    lines = obj.read_text().splitlines()
    assert any(line.startswith("v ") for line in lines)
    assert any(line.startswith("f ") for line in lines)


def test_check_gradients(zero_run):
    tmpdir, config, _ = zero_run
    out = tmpdir / "check.csv"
    retcode = foamopt(
        "check-gradients",
        "--config",
        config,
        "--seeds",
        tmpdir / "run" / "seeds.json",
        "--samples",
        2,
        "--out",
        out,
        cwd=tmpdir,
    )
    assert retcode.returncode == EXIT_OK, retcode.stderr.decode()
    with open(out) as f:
        rows = list(csv.reader(f))
    assert rows[0][:3] == ["iteration", "variable", "quantity"]
    assert len(rows) == 1 + 3 * 2
    assert b"cos_C" in retcode.stdout


@pytest.mark.slow
def test_bridge(CONFIG_ROOT, tmp_path):
    config = write_config(CONFIG_ROOT, tmp_path, base="bridge2d.yaml", snapshot_every=0)
    retcode = foamopt("run", "--config", config, "--out", tmp_path / "bridge", "--threads", 4, cwd=tmp_path)
    assert retcode.returncode in (EXIT_OK, EXIT_NOT_CONVERGED), retcode.stderr.decode()
    summary = json.loads((tmp_path / "bridge" / "summary.json").read_text())
    assert summary["C"] <= 0.8 * summary["C0"]
    assert summary["V_frac"] <= 0.3 * (1 + 1e-3)


@pytest.mark.slow
def test_cube_low_volume(CONFIG_ROOT, tmp_path):
    config = write_config(CONFIG_ROOT, tmp_path, base="cube3d_low_volume.yaml", snapshot_every=0)
    retcode = foamopt("run", "--config", config, "--out", tmp_path / "cube", "--threads", 4, cwd=tmp_path)
    assert retcode.returncode in (EXIT_OK, EXIT_NOT_CONVERGED), retcode.stderr.decode()
    summary = json.loads((tmp_path / "cube" / "summary.json").read_text())
    assert summary["V_frac"] <= 0.05 * (1 + 1e-3)

    cube = Box([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
    seeds = SeedSet.load(str(tmp_path / "cube" / "seeds.json"))
    graph = clip(tessellate(seeds, margin_box(*cube.bbox())), cube, 1.0 / 48)
    n = graph.n_vertices
    adjacency = coo_matrix((np.ones(graph.n_edges), (graph.edges[:, 0], graph.edges[:, 1])), shape=(n, n))
    _, labels = connected_components(adjacency, directed=False)
    x = graph.vertices[:, 0]
    loaded = np.unique(labels[np.abs(x - 1.0) < 1e-8])
    supported = np.unique(labels[np.abs(x) < 1e-8])
    assert len(loaded) > 0 and len(supported) > 0
    main = np.intersect1d(loaded, supported)
    assert len(main) == 1
    # pieces cut off across a corner or an edge of the cube end on the boundary at both sides
    on_boundary = cube.phi(graph.vertices) < 1e-8
    rest = labels[graph.edges[:, 0]] != main[0]
    assert np.all(on_boundary[graph.edges[rest]])
