import logging
from typing import Dict, Optional

import numpy as np

from foamopt.errors import ConfigError
from foamopt.utils.savenload import atomic_write, load_file
from ._coarse import CoarseMesh

_VTK_CELL_TYPE = {2: 5, 3: 10}


def read_mesh_json(filename: str, domain, depth: int = 2, face_controls: bool = True) -> CoarseMesh:
    """Load a two-level mesh from JSON.

    The file holds ``nodes`` (``[[x, y(, z)], ...]``), ``simplices`` (node ids,
    positively oriented) and ``coarse_cells``, a list of mappings with
    ``corners``, ``simplices`` (ids of the owned simplices) and, in 3D,
    ``faces`` (corner ids of every face in cyclic order). Fine meshes of
    neighboring cells need not match.
    """
    data = load_file(supported_formats={"json": "json"}, filename=filename)
    missing = [k for k in ("nodes", "simplices", "coarse_cells") if k not in data]
    if missing:
        raise ConfigError(f"Mesh file {filename} misses {missing}")
    nodes = np.asarray(data["nodes"], dtype=np.float64)
    if nodes.ndim != 2 or nodes.shape[1] != domain.dim:
        raise ConfigError(
            f"Mesh file {filename} has nodes of shape {nodes.shape}, the domain is {domain.dim}D"
        )
    for i, cell in enumerate(data["coarse_cells"]):
        if "corners" not in cell or "simplices" not in cell:
            raise ConfigError(f"coarse cell {i} of {filename} needs `corners` and `simplices`")
        if domain.dim == 3 and "faces" not in cell:
            raise ConfigError(f"3D coarse cell {i} of {filename} needs `faces`")
    logging.info(f"Reading two-level mesh from {filename}")
    return CoarseMesh.from_cells(
        nodes, data["simplices"], data["coarse_cells"], domain, depth, face_controls
    )


def write_vtk(
    filename: str,
    mesh,
    cell_data: Optional[Dict[str, np.ndarray]] = None,
    point_data: Optional[Dict[str, np.ndarray]] = None,
    title: str = "foamopt",
) -> str:
    """Write a fine mesh and its fields as a legacy ASCII VTK unstructured grid.

    Scalars have one value per cell / point; vectors have shape ``(n, d)``.
    """
    nodes = mesh.nodes
    if nodes.shape[1] == 2:
        nodes = np.concatenate([nodes, np.zeros((len(nodes), 1))], axis=1)
    elements = mesh.elements
    k = elements.shape[1]
    with atomic_write(filename) as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {len(nodes)} double\n")
        np.savetxt(f, nodes, fmt="%.12g")
        f.write(f"CELLS {len(elements)} {len(elements) * (k + 1)}\n")
        np.savetxt(f, np.concatenate([np.full((len(elements), 1), k), elements], axis=1), fmt="%d")
        f.write(f"CELL_TYPES {len(elements)}\n")
        np.savetxt(f, np.full(len(elements), _VTK_CELL_TYPE[mesh.dim]), fmt="%d")
        for header, data, n in (("CELL_DATA", cell_data, len(elements)), ("POINT_DATA", point_data, len(nodes))):
            if not data:
                continue
            f.write(f"{header} {n}\n")
            for name, values in data.items():
                values = np.asarray(values, dtype=np.float64)
                if values.ndim == 1:
                    f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    np.savetxt(f, values, fmt="%.12g")
                else:
                    if values.shape[1] == 2:
                        values = np.concatenate([values, np.zeros((len(values), 1))], axis=1)
                    f.write(f"VECTORS {name} double\n")
                    np.savetxt(f, values, fmt="%.12g")
    return filename
