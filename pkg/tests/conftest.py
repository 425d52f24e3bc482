"""Shared fixtures: small domains, meshes, load cases and a seed set."""
import os
import pathlib

import numpy as np
import pytest

from foamopt.domain import Box
from foamopt.fem import LoadSpec, Material
from foamopt.mesh import build_structured
from foamopt.voronoi import SeedSet

if "FOAMOPT_THREADS" not in os.environ:
    # two workers keep the threaded paths covered
    os.environ["FOAMOPT_THREADS"] = "2"


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run the slow acceptance tests"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def CONFIG_ROOT():
    return pathlib.Path(__file__).parents[1] / "configs"


@pytest.fixture(scope="session")
def unit_square():
    return Box([0.0, 0.0], [1.0, 1.0])


@pytest.fixture(scope="session")
def unit_cube():
    return Box([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])


@pytest.fixture(scope="session")
def square_mesh(unit_square):
    """2 x 2 coarse cells, 16 x 16 fine cells."""
    return build_structured(unit_square, [2, 2], refine=8, depth=2)


@pytest.fixture(scope="session")
def cube_mesh(unit_cube):
    return build_structured(unit_cube, 1, refine=3, depth=2)


@pytest.fixture(scope="session")
def material():
    return Material(young=1.0, poisson=0.3, plane="stress")


@pytest.fixture(scope="session")
def tension():
    """Uniaxial unit tension along x with the least constraints that remove rigid motion."""
    return LoadSpec(
        dirichlet=[
            {"select": {"face": "x-"}, "axes": [0]},
            {"select": {"point": [0.0, 0.0]}, "axes": [1]},
        ],
        neumann=[{"select": {"face": "x+"}, "traction": [1.0, 0.0]}],
    )


@pytest.fixture(scope="session")
def cantilever():
    return LoadSpec(
        dirichlet=[{"select": {"face": "x-"}}],
        neumann=[{"select": {"face": "x+"}, "force": [0.0, -1.0]}],
    )


@pytest.fixture(scope="session")
def seeds2d():
    rng = np.random.default_rng(7)
    positions = 0.1 + 0.8 * rng.random((8, 2))
    return SeedSet(positions, np.full(8, 0.08), [0.0, 0.0], [1.0, 1.0])
