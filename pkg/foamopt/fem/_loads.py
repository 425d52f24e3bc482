"""Boundary conditions: selectors, Dirichlet constraints and nodal loads.

A load case is configured as a nested mapping::

    loadcase:
      dirichlet:
        - select: {face: x-}
          axes: [0, 1]
          value: 0.0
      neumann:
        - select: {face: x+}
          force: [0.0, -1.0]

Selectors are ``{face: x-|x+|y-|y+|z-|z+}`` (a face of the mesh bounding box),
``{box: [[lo...], [hi...]]}`` or ``{point: [x...]}`` with an optional ``tol``
(without it the single nearest node is taken). Neumann entries give either the
total ``force`` spread area-weighted over the selected boundary facets, or a
``traction`` per unit boundary measure.
"""
import itertools
import logging
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from foamopt.errors import ConfigError
from foamopt.utils import Config

_FACE_TOL = 1e-9
_AXES = "xyz"


class Selector:
    def __init__(self, spec: dict, where: str = "select"):
        if not isinstance(spec, dict) or len(set(spec) & {"face", "box", "point"}) != 1:
            raise ConfigError(
                f"`{where}` must hold exactly one of `face`, `box` or `point`, got {spec!r}"
            )
        self.where = where
        self.tol = spec.get("tol", None)
        if "face" in spec:
            face = str(spec["face"]).lower()
            if len(face) != 2 or face[0] not in _AXES or face[1] not in "+-":
                raise ConfigError(f"`{where}.face` must look like `x-` or `z+`, got {spec['face']!r}")
            self.kind, self.axis, self.upper = "face", _AXES.index(face[0]), face[1] == "+"
        elif "box" in spec:
            box = np.asarray(spec["box"], dtype=np.float64)
            if box.ndim != 2 or box.shape[0] != 2:
                raise ConfigError(f"`{where}.box` must be [[lo...], [hi...]], got {spec['box']!r}")
            self.kind, self.box = "box", box
        else:
            self.kind, self.point = "point", np.asarray(spec["point"], dtype=np.float64)

    def __repr__(self):
        if self.kind == "face":
            return f"Selector(face={_AXES[self.axis]}{'+' if self.upper else '-'})"
        if self.kind == "box":
            return f"Selector(box={self.box.tolist()})"
        return f"Selector(point={self.point.tolist()})"

    def __call__(self, points: np.ndarray, bbox: Tuple[np.ndarray, np.ndarray]) -> np.ndarray:
        """Boolean mask of the selected ``points``."""
        lo, hi = bbox
        dim = points.shape[1]
        diag = float(np.linalg.norm(hi - lo))
        tol = _FACE_TOL * diag if self.tol is None else float(self.tol)
        if self.kind == "face":
            if self.axis >= dim:
                raise ConfigError(f"`{self.where}` selects a z face of a 2D problem")
            target = hi[self.axis] if self.upper else lo[self.axis]
            mask = np.abs(points[:, self.axis] - target) <= tol
        elif self.kind == "box":
            if self.box.shape[1] != dim:
                raise ConfigError(f"`{self.where}.box` is not {dim}D")
            mask = np.all((points >= self.box[0] - tol) & (points <= self.box[1] + tol), axis=1)
        else:
            if self.point.shape != (dim,):
                raise ConfigError(f"`{self.where}.point` is not {dim}D")
            dist = np.linalg.norm(points - self.point, axis=1)
            if self.tol is None:
                mask = np.zeros(len(points), dtype=bool)
                mask[np.argmin(dist)] = True
            else:
                mask = dist <= tol
        if not mask.any():
            raise ConfigError(f"`{self.where}` {self!r} selects no node")
        return mask


class LoadCase:
    """Resolved boundary conditions of one linear system.

    Args:
        dirichlet_dofs: sorted constrained DOF ids
        dirichlet_values: prescribed values of those DOFs
        force: ``(n_dofs,)`` nodal force vector
    """

    def __init__(self, dirichlet_dofs, dirichlet_values, force):
        self.dirichlet_dofs = np.asarray(dirichlet_dofs, dtype=np.int64)
        self.dirichlet_values = np.asarray(dirichlet_values, dtype=np.float64)
        self.force = np.asarray(force, dtype=np.float64)
        if self.dirichlet_dofs.shape != self.dirichlet_values.shape:
            raise ValueError("dirichlet_dofs and dirichlet_values differ in length")

    @property
    def n_dofs(self) -> int:
        return self.force.shape[0]

    @property
    def homogeneous(self) -> bool:
        return not np.any(self.dirichlet_values)

    def free_dofs(self) -> np.ndarray:
        free = np.ones(self.n_dofs, dtype=bool)
        free[self.dirichlet_dofs] = False
        return np.nonzero(free)[0]

    def scaled(self, factor: float) -> "LoadCase":
        return LoadCase(self.dirichlet_dofs, self.dirichlet_values * factor, self.force * factor)

    def __repr__(self):
        return (
            f"LoadCase(n_dofs={self.n_dofs}, n_fixed={len(self.dirichlet_dofs)}, "
            f"|f|={np.linalg.norm(self.force):.4g})"
        )


def boundary_facets(elements: np.ndarray) -> np.ndarray:
    """Facets (node id tuples) that belong to exactly one simplex."""
    k = elements.shape[1]
    facets = np.concatenate(
        [elements[:, list(c)] for c in itertools.combinations(range(k), k - 1)]
    )
    keys = np.sort(facets, axis=1)
    _, index, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    return facets[index[counts == 1]]


def facet_measures(nodes: np.ndarray, facets: np.ndarray) -> np.ndarray:
    p = nodes[facets]
    if facets.shape[1] == 2:
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


class LoadSpec:
    """Configured boundary conditions, resolvable on fine and coarse nodes.

    Args:
        dirichlet: list of ``{select, axes, value}`` mappings
        neumann: list of ``{select, force | traction}`` mappings
    """

    def __init__(self, dirichlet: Optional[List[dict]] = None, neumann: Optional[List[dict]] = None):
        dirichlet = [] if dirichlet is None else list(dirichlet)
        neumann = [] if neumann is None else list(neumann)
        if not dirichlet:
            raise ConfigError("The load case needs at least one `dirichlet` entry")
        self.dirichlet = []
        for i, entry in enumerate(dirichlet):
            where = f"loadcase.dirichlet[{i}]"
            if not isinstance(entry, dict) or "select" not in entry:
                raise ConfigError(f"`{where}` needs a `select` entry")
            self.dirichlet.append(
                (Selector(entry["select"], f"{where}.select"), entry.get("axes", None), entry.get("value", 0.0))
            )
        self.neumann = []
        for i, entry in enumerate(neumann):
            where = f"loadcase.neumann[{i}]"
            if not isinstance(entry, dict) or "select" not in entry:
                raise ConfigError(f"`{where}` needs a `select` entry")
            if ("force" in entry) == ("traction" in entry):
                raise ConfigError(f"`{where}` needs exactly one of `force` or `traction`")
            kind = "force" if "force" in entry else "traction"
            self.neumann.append(
                (Selector(entry["select"], f"{where}.select"), kind, np.asarray(entry[kind], dtype=np.float64))
            )

    def __repr__(self):
        return f"LoadSpec(n_dirichlet={len(self.dirichlet)}, n_neumann={len(self.neumann)})"

    def constraints(self, points: np.ndarray, bbox) -> Tuple[np.ndarray, np.ndarray]:
        """Constrained DOFs and their values on ``points``; later entries win."""
        dim = points.shape[1]
        fixed: Dict[int, float] = {}
        for selector, axes, value in self.dirichlet:
            axes = list(range(dim)) if axes is None else [int(a) for a in np.atleast_1d(axes)]
            if any(a < 0 or a >= dim for a in axes):
                raise ConfigError(f"Dirichlet axes {axes} out of range for a {dim}D problem")
            values = np.broadcast_to(np.asarray(value, dtype=np.float64), (len(axes),))
            for node in np.nonzero(selector(points, bbox))[0]:
                for a, v in zip(axes, values):
                    fixed[int(node) * dim + a] = float(v)
        dofs = np.array(sorted(fixed), dtype=np.int64)
        return dofs, np.array([fixed[d] for d in dofs], dtype=np.float64)

    def force(self, mesh) -> np.ndarray:
        """Consistent nodal force vector on the fine mesh."""
        dim = mesh.dim
        bbox = mesh.bbox()
        f = np.zeros((mesh.n_nodes, dim))
        if not self.neumann:
            return f.reshape(-1)
        facets = boundary_facets(mesh.elements)
        measures = facet_measures(mesh.nodes, facets)
        for selector, kind, vector in self.neumann:
            if vector.shape != (dim,):
                raise ConfigError(f"Neumann {kind} {vector.tolist()} is not {dim}D")
            selected = selector(mesh.nodes, bbox)
            on = selected[facets].all(axis=1)
            weights = np.zeros(mesh.n_nodes)
            np.add.at(weights, facets[on].ravel(), np.repeat(measures[on] / dim, dim))
            if kind == "traction":
                if not on.any():
                    raise ConfigError(f"{selector!r} covers no boundary facet, a traction cannot act on it")
                f += weights[:, None] * vector
            else:
                if weights.sum() <= 0:
                    weights = selected.astype(np.float64)
                f += (weights / weights.sum())[:, None] * vector
        return f.reshape(-1)

    def fine(self, mesh) -> LoadCase:
        dofs, values = self.constraints(mesh.nodes, mesh.bbox())
        case = LoadCase(dofs, values, self.force(mesh))
        logging.debug(f"fine {case!r}")
        return case

    def coarse(self, coarse_mesh, force: np.ndarray) -> LoadCase:
        """Re-apply the Dirichlet selectors to the coarse nodes, with the coarse ``force``."""
        dofs, values = self.constraints(coarse_mesh.nodes, coarse_mesh.fine.bbox())
        case = LoadCase(dofs, values, force)
        logging.debug(f"coarse {case!r}")
        return case


def loadcase_from_config(config: Union[dict, Config], prefix: str = "loadcase") -> LoadSpec:
    spec = config.get(prefix, None)
    if spec is None:
        raise ConfigError(f"Load case with key `{prefix}` isn't present in this config")
    if isinstance(spec, LoadSpec):
        return spec
    if not isinstance(spec, dict):
        raise ConfigError(f"`{prefix}` must be a mapping with `dirichlet` and `neumann` lists")
    unknown = set(spec) - {"dirichlet", "neumann"}
    if unknown:
        raise ConfigError(f"Unknown option(s) {sorted(unknown)} in `{prefix}`")
    return LoadSpec(spec.get("dirichlet"), spec.get("neumann"))
