import json

import numpy as np
import pytest

from foamopt.errors import ConfigError
from foamopt.mesh import read_mesh_json, write_vtk


def square_cell():
    """One coarse square over a 2 x 2 grid of fine squares, each split into two triangles."""
    nodes = [[0.5 * i, 0.5 * j] for j in range(3) for i in range(3)]
    simplices = []
    for j in range(2):
        for i in range(2):
            a = 3 * j + i
            simplices += [[a, a + 1, a + 4], [a, a + 4, a + 3]]
    cell = {"corners": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], "simplices": list(range(8))}
    return dict(nodes=nodes, simplices=simplices, coarse_cells=[cell])


def write(tmp_path, data, name="mesh.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_read(tmp_path, unit_square):
    mesh = read_mesh_json(write(tmp_path, square_cell()), unit_square)
    assert mesh.n_elements == 1
    assert mesh.n_nodes == 8
    assert mesh.fine.n_nodes == 9
    assert mesh.fine.volumes.sum() == pytest.approx(1.0)
    elem = mesh.elements[0]
    assert len(elem.boundary) == 8
    assert elem.interior.tolist() == [4]


@pytest.mark.parametrize("missing", ["nodes", "simplices", "coarse_cells"])
def test_missing_entries(tmp_path, unit_square, missing):
    data = square_cell()
    del data[missing]
    with pytest.raises(ConfigError, match=missing):
        read_mesh_json(write(tmp_path, data), unit_square)


def test_wrong_dimension(tmp_path, unit_cube):
    with pytest.raises(ConfigError):
        read_mesh_json(write(tmp_path, square_cell()), unit_cube)


def test_cell_without_corners(tmp_path, unit_square):
    data = square_cell()
    del data["coarse_cells"][0]["corners"]
    with pytest.raises(ConfigError, match="corners"):
        read_mesh_json(write(tmp_path, data), unit_square)


def test_write_vtk(tmp_path, square_mesh):
    fine = square_mesh.fine
    path = write_vtk(
        str(tmp_path / "density.vtk"),
        fine,
        cell_data={"density": np.ones(fine.n_elements)},
        point_data={"u": np.zeros((fine.n_nodes, 2))},
    )
    lines = open(path).read().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert f"POINTS {fine.n_nodes} double" in lines
    assert f"CELLS {fine.n_elements} {4 * fine.n_elements}" in lines
    assert f"CELL_DATA {fine.n_elements}" in lines
    assert "SCALARS density double 1" in lines
    assert "VECTORS u double" in lines
    # 2D points are padded with z = 0
    first = lines[lines.index(f"POINTS {fine.n_nodes} double") + 1].split()
    assert len(first) == 3 and float(first[2]) == 0.0
