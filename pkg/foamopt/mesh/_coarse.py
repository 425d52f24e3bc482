"""Two-level mesh: coarse polygonal/polyhedral elements, each owning fine simplices."""
import itertools
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from foamopt.errors import EmptyDomainError
from ._fine import FineMesh, simplex_volumes

ON_FACE_RTOL = 1e-9
_QUANTUM_RTOL = 1e-7


def face_labels(n_corners: int, depth: int) -> np.ndarray:
    """Multi-indices of ``n_corners`` entries summing to ``depth``, in descending lexicographic order."""
    labels = []
    for combo in itertools.combinations_with_replacement(range(n_corners), depth):
        labels.append(np.bincount(combo, minlength=n_corners))
    labels = np.array(labels, dtype=np.int64).reshape(-1, n_corners)
    order = np.lexsort(labels.T[::-1])[::-1]
    return labels[order]


def is_boundary_label(label: Sequence[int]) -> bool:
    """Whether a control label lies on the boundary of its polygon (a corner or a side)."""
    nz = np.nonzero(np.asarray(label))[0]
    p = len(label)
    if len(nz) == 1:
        return True
    if len(nz) == 2:
        a, b = nz
        return (b - a) == 1 or (a == 0 and b == p - 1)
    return False


def _quantize(points: np.ndarray, quantum: float) -> np.ndarray:
    return np.round(points / quantum).astype(np.int64)


class FaceNet:
    """Control net of one face of a coarse element.

    Args:
        corner_ids: ids of the face corners among the element corners, in cyclic order
        labels: ``(L, p)`` control labels of the face
        transfer: ``(L, n)`` weights mapping element coarse nodes onto the labels
    """

    def __init__(self, corner_ids: np.ndarray, labels: np.ndarray, transfer: np.ndarray):
        self.corner_ids = np.asarray(corner_ids, dtype=np.int64)
        self.labels = labels
        self.transfer = transfer

    @property
    def depth(self) -> int:
        return int(self.labels[0].sum())


def layout_coarse_nodes(
    corners: np.ndarray,
    faces: List[Sequence[int]],
    depth: int,
    face_controls: bool = True,
    quantum: Optional[float] = None,
) -> Tuple[np.ndarray, List[FaceNet]]:
    """Control nodes of a coarse element.

    Every face (a side in 2D, a polygon in 3D) gets the labels ``|i| = depth``
    placed at ``sum_k i_k / depth P_k``. Labels at the same position are merged
    into one node. Without ``face_controls`` the labels inside a 3D face are not
    nodes; their values are the corner values weighted by ``i_k / depth``.

    Returns:
        ``(coordinates, face nets)``
    """
    if depth < 1:
        raise ValueError(f"S-patch depth must be >= 1, got {depth}")
    corners = np.asarray(corners, dtype=np.float64)
    if quantum is None:
        quantum = _QUANTUM_RTOL * float(np.linalg.norm(corners.max(axis=0) - corners.min(axis=0)))

    positions = []
    per_face = []
    for face in faces:
        face = np.asarray(face, dtype=np.int64)
        labels = face_labels(len(face), depth)
        pos = labels @ corners[face] / depth
        node_like = np.array([face_controls or is_boundary_label(lab) for lab in labels])
        per_face.append((face, labels, pos, node_like))
        positions.append(pos[node_like])
    positions = np.concatenate(positions)
    keys, first, inverse = np.unique(
        _quantize(positions, quantum), axis=0, return_index=True, return_inverse=True
    )
    inverse = inverse.reshape(-1)
    coordinates = positions[first]
    n_nodes = len(coordinates)
    corner_node = {}
    lookup = {tuple(k): i for i, k in enumerate(keys)}
    for c, x in enumerate(corners):
        corner_node[c] = lookup[tuple(_quantize(x[None, :], quantum)[0])]

    nets = []
    for face, labels, pos, node_like in per_face:
        transfer = np.zeros((len(labels), n_nodes))
        for row, (lab, x, is_node) in enumerate(zip(labels, pos, node_like)):
            if is_node:
                transfer[row, lookup[tuple(_quantize(x[None, :], quantum)[0])]] = 1.0
            else:
                for k, ik in enumerate(lab):
                    if ik:
                        transfer[row, corner_node[face[k]]] += ik / depth
        nets.append(FaceNet(face, labels, transfer))
    return coordinates, nets


def on_face(points: np.ndarray, face_corners: np.ndarray, tol: float) -> np.ndarray:
    """Points lying on a side (2D) or on a convex planar polygon (3D) within ``tol``."""
    points = np.atleast_2d(points)
    if face_corners.shape[1] == 2:
        a, b = face_corners[0], face_corners[1]
        ab = b - a
        t = np.clip((points - a) @ ab / (ab @ ab), 0.0, 1.0)
        return np.linalg.norm(points - a - t[:, None] * ab, axis=1) <= tol
    # Newell normal of the polygon
    nxt = np.roll(face_corners, -1, axis=0)
    normal = np.sum(np.cross(face_corners, nxt), axis=0)
    normal = normal / np.linalg.norm(normal)
    near_plane = np.abs((points - face_corners[0]) @ normal) <= tol
    inside = np.ones(len(points), dtype=bool)
    for k in range(len(face_corners)):
        edge = nxt[k] - face_corners[k]
        side = np.cross(edge, points - face_corners[k]) @ normal
        inside &= side >= -tol * np.linalg.norm(edge)
    return near_plane & inside


class CoarseElement:
    """One coarse element and the fine mesh it owns.

    Args:
        index: id of the element
        corners: ``(p, d)`` corner coordinates
        faces: corner ids of every face, in cyclic order
        fine_elements: ids of the owned fine simplices
        fine_nodes: sorted global ids of the owned fine nodes
        boundary, interior: global fine node ids on / off the element boundary
        boundary_face: face used to interpolate every boundary node
        node_ids: global coarse node ids of the element
        nets: control net of every face over ``node_ids``
    """

    def __init__(
        self,
        index: int,
        corners: np.ndarray,
        faces: List[np.ndarray],
        fine_elements: np.ndarray,
        fine_nodes: np.ndarray,
        boundary: np.ndarray,
        interior: np.ndarray,
        boundary_face: np.ndarray,
        node_ids: np.ndarray,
        nets: List[FaceNet],
    ):
        self.index = index
        self.corners = corners
        self.faces = faces
        self.fine_elements = fine_elements
        self.fine_nodes = fine_nodes
        self.boundary = boundary
        self.interior = interior
        self.boundary_face = boundary_face
        self.node_ids = node_ids
        self.nets = nets

    @property
    def dim(self) -> int:
        return self.corners.shape[1]

    @property
    def n_coarse_nodes(self) -> int:
        return len(self.node_ids)

    def __repr__(self):
        return (
            f"CoarseElement({self.index}, n_fine_elements={len(self.fine_elements)}, "
            f"n_boundary={len(self.boundary)}, n_interior={len(self.interior)}, "
            f"n_coarse_nodes={self.n_coarse_nodes})"
        )


def classify_nodes(elem: CoarseElement, nodes: np.ndarray, l_a: float) -> Tuple[np.ndarray, np.ndarray]:
    """Split the fine nodes of ``elem`` into (boundary, interior) global ids."""
    boundary, _ = _classify(elem.fine_nodes, nodes, elem.corners, elem.faces, ON_FACE_RTOL * l_a)
    return elem.fine_nodes[boundary], elem.fine_nodes[~boundary]


def _classify(fine_nodes, nodes, corners, faces, tol):
    points = nodes[fine_nodes]
    face_of = np.full(len(fine_nodes), -1, dtype=np.int64)
    for f in range(len(faces) - 1, -1, -1):
        hit = on_face(points, corners[np.asarray(faces[f])], tol)
        face_of[hit] = f
    return face_of >= 0, face_of


def _default_faces(dim: int, n_corners: int) -> List[np.ndarray]:
    if dim != 2:
        raise ValueError("3D coarse cells need explicit faces")
    return [np.array([k, (k + 1) % n_corners]) for k in range(n_corners)]


class CoarseMesh:
    """Coarse elements over a shared fine mesh, with globally numbered coarse nodes.

    Coarse degrees of freedom are node major: ``dof = node * dim + axis``.
    """

    def __init__(
        self,
        fine: FineMesh,
        elements: List[CoarseElement],
        nodes: np.ndarray,
        depth: int,
        face_controls: bool = True,
    ):
        self.fine = fine
        self.elements = elements
        self.nodes = nodes
        self.depth = depth
        self.face_controls = face_controls

    @property
    def dim(self) -> int:
        return self.fine.dim

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_dofs(self) -> int:
        return self.n_nodes * self.dim

    @property
    def l_a(self) -> float:
        return self.fine.l_a

    def __repr__(self):
        return (
            f"CoarseMesh(n_elements={self.n_elements}, n_nodes={self.n_nodes}, depth={self.depth}, "
            f"fine={self.fine!r})"
        )

    @classmethod
    def from_cells(
        cls,
        nodes: np.ndarray,
        simplices: np.ndarray,
        cells: List[dict],
        domain,
        depth: int = 2,
        face_controls: bool = True,
    ) -> "CoarseMesh":
        """Build from fine nodes, fine simplices and coarse cells.

        Every cell is a mapping with ``corners``, ``simplices`` (owned fine
        simplex ids) and, in 3D, ``faces``.
        """
        nodes = np.asarray(nodes, dtype=np.float64)
        simplices = np.asarray(simplices, dtype=np.int64)
        dim = nodes.shape[1]
        owner = np.full(len(simplices), -1, dtype=np.int64)
        for c, cell in enumerate(cells):
            owner[np.asarray(cell["simplices"], dtype=np.int64)] = c
        if np.any(owner < 0):
            raise ValueError(f"{int(np.sum(owner < 0))} fine simplices belong to no coarse cell")
        fine = FineMesh(nodes, simplices, domain.phi(nodes), owner)

        diag = fine.diagonal
        quantum = _QUANTUM_RTOL * diag
        tol = ON_FACE_RTOL * fine.l_a
        layouts = []
        for c, cell in enumerate(cells):
            corners = np.asarray(cell["corners"], dtype=np.float64)
            faces = cell.get("faces", None)
            faces = _default_faces(dim, len(corners)) if faces is None else [np.asarray(f) for f in faces]
            coordinates, nets = layout_coarse_nodes(corners, faces, depth, face_controls, quantum)
            layouts.append((corners, faces, coordinates, nets))

        all_coords = np.concatenate([lay[2] for lay in layouts])
        _, first, inverse = np.unique(
            _quantize(all_coords, quantum), axis=0, return_index=True, return_inverse=True
        )
        inverse = inverse.reshape(-1)
        coarse_nodes = all_coords[first]

        elements = []
        offset = 0
        for c, (corners, faces, coordinates, nets) in enumerate(layouts):
            node_ids = inverse[offset:offset + len(coordinates)]
            offset += len(coordinates)
            fine_elements = np.nonzero(owner == c)[0]
            fine_nodes = np.unique(simplices[fine_elements])
            on_boundary, face_of = _classify(fine_nodes, nodes, corners, faces, tol)
            elements.append(
                CoarseElement(
                    index=c,
                    corners=corners,
                    faces=faces,
                    fine_elements=fine_elements,
                    fine_nodes=fine_nodes,
                    boundary=fine_nodes[on_boundary],
                    interior=fine_nodes[~on_boundary],
                    boundary_face=face_of[on_boundary],
                    node_ids=node_ids,
                    nets=nets,
                )
            )
        mesh = cls(fine, elements, coarse_nodes, depth, face_controls)
        logging.info(f"Built {mesh!r}")
        return mesh


def _grid_index(counts: np.ndarray) -> np.ndarray:
    return np.stack(np.meshgrid(*[np.arange(c) for c in counts], indexing="ij"), axis=-1).reshape(-1, len(counts))


_HEX_FACES = [[0, 3, 2, 1], [4, 5, 6, 7], [0, 1, 5, 4], [3, 7, 6, 2], [0, 4, 7, 3], [1, 2, 6, 5]]
_HEX_CORNERS = np.array(
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]
)
_QUAD_CORNERS = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])


def build_structured(
    domain,
    coarse_res,
    refine: int = 8,
    depth: int = 2,
    face_controls: bool = True,
) -> CoarseMesh:
    """Axis-aligned coarse grid over the domain bounding box, each cell refined
    into ``refine^d`` sub-cells split into simplices.

    Coarse cells without any fine node or fine element centroid inside the
    domain are dropped.

    Args:
        domain: ``foamopt.domain.DomainField``
        coarse_res: coarse cells per axis (an int applies to every axis)
        refine: fine cells per coarse cell and axis
        depth: S-patch depth of the coarse nodes
        face_controls: place control nodes inside 3D faces
    """
    dim = domain.dim
    res = np.broadcast_to(np.asarray(coarse_res, dtype=np.int64), (dim,)).copy()
    if np.any(res < 1):
        raise ValueError(f"coarse_res must be >= 1 per axis, got {coarse_res}")
    if refine < 2:
        raise ValueError(f"refine must be >= 2, got {refine}")
    lo, hi = domain.bbox()
    n = res * refine

    def coords(index):
        return lo + (hi - lo) * index / n

    grid = _grid_index(n + 1)
    strides = np.array([int(np.prod((n + 1)[a + 1:])) for a in range(dim)])
    nodes = coords(grid)

    cells = _grid_index(n)
    base = cells @ strides
    if dim == 2:
        c00, c10 = base, base + strides[0]
        c11, c01 = c10 + strides[1], base + strides[1]
        simplices = np.concatenate([np.stack([c00, c10, c11], 1), np.stack([c00, c11, c01], 1)])
        cell_of = np.concatenate([np.arange(len(cells))] * 2)
    else:
        tets = []
        for perm in itertools.permutations(range(dim)):
            path = [base]
            for axis in perm:
                path.append(path[-1] + strides[axis])
            tets.append(np.stack(path, axis=1))
        simplices = np.concatenate(tets)
        cell_of = np.concatenate([np.arange(len(cells))] * len(tets))
        negative = simplex_volumes(nodes, simplices) < 0
        simplices[negative] = simplices[negative][:, [0, 1, 3, 2]]

    coarse_index = cells[cell_of] // refine
    coarse_strides = np.array([int(np.prod(res[a + 1:])) for a in range(dim)])
    owner = coarse_index @ coarse_strides

    node_inside = domain.phi(nodes) > 0
    centroid_inside = domain.phi(nodes[simplices].mean(axis=1)) > 0
    element_flag = node_inside[simplices].any(axis=1) | centroid_inside
    n_coarse = int(np.prod(res))
    keep_cell = np.bincount(owner, weights=element_flag, minlength=n_coarse) > 0
    if not keep_cell.any():
        raise EmptyDomainError("No coarse cell of the background grid reaches inside the domain")
    keep = keep_cell[owner]
    simplices, owner = simplices[keep], owner[keep]
    used, remap = np.unique(simplices.ravel(), return_inverse=True)
    nodes = nodes[used]
    simplices = remap.reshape(-1, dim + 1)

    kept = np.nonzero(keep_cell)[0]
    new_id = np.full(n_coarse, -1, dtype=np.int64)
    new_id[kept] = np.arange(len(kept))
    owner = new_id[owner]
    coarse_grid = _grid_index(res)
    unit = _QUAD_CORNERS if dim == 2 else _HEX_CORNERS
    cell_list = []
    for c in kept:
        corner_index = (coarse_grid[c] + unit) * refine
        cell = {"corners": coords(corner_index), "simplices": np.nonzero(owner == new_id[c])[0]}
        if dim == 3:
            cell["faces"] = _HEX_FACES
        cell_list.append(cell)
    logging.debug(f"kept {len(kept)} of {n_coarse} coarse cells")
    return CoarseMesh.from_cells(nodes, simplices, cell_list, domain, depth, face_controls)
