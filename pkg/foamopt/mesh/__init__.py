from ._fine import FineMesh, simplex_volumes, unique_edges
from ._coarse import (
    ON_FACE_RTOL,
    FaceNet,
    CoarseElement,
    CoarseMesh,
    build_structured,
    classify_nodes,
    layout_coarse_nodes,
    face_labels,
    is_boundary_label,
    on_face,
)
from ._io import read_mesh_json, write_vtk

__all__ = [
    ON_FACE_RTOL,
    FineMesh,
    simplex_volumes,
    unique_edges,
    FaceNet,
    CoarseElement,
    CoarseMesh,
    build_structured,
    classify_nodes,
    layout_coarse_nodes,
    face_labels,
    is_boundary_label,
    on_face,
    read_mesh_json,
    write_vtk,
]
