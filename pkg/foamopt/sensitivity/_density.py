"""Finite-difference derivatives of the fine-mesh density in every design variable.

Position variables re-tessellate a patch of seeds around the vertices they can
reach, radius variables only re-evaluate the beams (the tessellation does not
depend on the radii).
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from foamopt.implicit import LocalFoamEvaluator, heaviside, node_density, segment_distance
from foamopt.voronoi import DEFAULT_K, SeedSet, VoronoiGraph, clip, tessellate
from ._guard import GUARD_RTOL, differentiability_guard


def decode_variable(a: int, n_seeds: int, dim: int) -> Tuple[int, Optional[int]]:
    """``(seed, axis)`` of variable ``a``; ``axis`` is ``None`` for a radius.

    Variables are ordered as ``(X flattened, r)``.
    """
    a = int(a)
    if a < 0 or a >= n_seeds * (dim + 1):
        raise IndexError(f"variable {a} out of range for {n_seeds} seeds in {dim}D")
    if a < n_seeds * dim:
        return a // dim, a % dim
    return a - n_seeds * dim, None


def variable_index(seed: int, axis: Optional[int], n_seeds: int, dim: int) -> int:
    return n_seeds * dim + seed if axis is None else seed * dim + axis


class DensityJacobianSlice:
    """Derivative of the vertex densities in one design variable.

    Args:
        variable: variable id
        vertices: ids of the fine vertices with a nonzero derivative
        values: ``dH/da`` at those vertices
        flagged: number of vertices that used a forward difference
    """

    def __init__(self, variable: int, vertices, values, flagged: int = 0):
        self.variable = int(variable)
        self.vertices = np.asarray(vertices, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self.flagged = int(flagged)

    @classmethod
    def empty(cls, variable: int) -> "DensityJacobianSlice":
        return cls(variable, np.zeros(0, dtype=np.int64), np.zeros(0))

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"DensityJacobianSlice(variable={self.variable}, n_vertices={len(self)}, flagged={self.flagged})"

    def element_values(self, incidence: sparse.csc_matrix) -> Tuple[np.ndarray, np.ndarray]:
        """``(element ids, dH_e/da)`` with ``dH_e`` the vertex mean.

        Args:
            incidence: ``(E, V)`` element-vertex averaging matrix, see ``vertex_incidence``
        """
        if len(self) == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        dHe = incidence[:, self.vertices] @ self.values
        elements = np.nonzero(dHe)[0]
        return elements, dHe[elements]


def vertex_incidence(elements: np.ndarray, n_nodes: int) -> sparse.csc_matrix:
    """``(E, V)`` matrix taking vertex values to element means."""
    n_el, k = elements.shape
    rows = np.repeat(np.arange(n_el), k)
    return sparse.csc_matrix((np.full(n_el * k, 1.0 / k), (rows, elements.ravel())), shape=(n_el, n_nodes))


class DensitySensitivity:
    """Density slices of one design, sharing its geometry between variables.

    Args:
        seeds: current design
        full_graph: unclipped diagram of ``seeds``
        graph: diagram clipped to the domain, the beams of ``foam``
        foam: implicit foam of ``seeds``
        mesh: fine mesh
        domain: design domain
        box: truncation box of the diagrams
        clip_length: sample length used when clipping
        step: finite-difference step, defaults to ``mesh.l_a``
        k: nearest-seed count of the three-point branch test
        three_point: use the three-point branch where radii allow
        guard: use forward differences at near critical vertices
        n_threads: workers evaluating variables
    """

    def __init__(
        self,
        seeds: SeedSet,
        full_graph: VoronoiGraph,
        graph: VoronoiGraph,
        foam,
        mesh,
        domain,
        box,
        clip_length: float,
        step: Optional[float] = None,
        k: Optional[int] = None,
        three_point: bool = True,
        guard: bool = True,
        n_threads: int = 1,
    ):
        self.seeds = seeds
        self.full_graph = full_graph
        self.graph = graph
        self.foam = foam
        self.mesh = mesh
        self.domain = domain
        self.box = box
        self.step = float(mesh.l_a if step is None else step)
        if self.step <= 0:
            raise ValueError(f"finite-difference step must be positive, got {step}")
        self.n_threads = max(1, int(n_threads))
        self.n_seeds, self.dim = seeds.positions.shape
        self.evaluator = LocalFoamEvaluator(
            foam, domain, box, clip_length, k=DEFAULT_K[self.dim] if k is None else k, three_point=three_point
        )
        self.node_tree = cKDTree(mesh.nodes)
        self.seed_tree = cKDTree(seeds.positions)
        # vertices outside the smoothed domain keep H = alpha whatever the seeds
        self.active = heaviside(mesh.node_domain_phi, foam.eps, 0.0) > 0.0
        self.incidence = vertex_incidence(mesh.elements, mesh.n_nodes)
        self.r_max = float(seeds.radii.max()) + self.step
        self.flags = np.zeros(mesh.n_nodes, dtype=bool)
        if guard and self.n_seeds > self.dim:
            ids = np.nonzero(self.active)[0]
            self.flags[ids] = differentiability_guard(mesh.nodes[ids], seeds.positions, mesh.l_a, rtol=GUARD_RTOL)

    @property
    def n_variables(self) -> int:
        return self.n_seeds * (self.dim + 1)

    def _vertices_near(self, v1: np.ndarray, v2: np.ndarray, radius: float) -> np.ndarray:
        """Active vertex ids within ``radius`` of any segment ``[v1, v2]``."""
        if len(v1) == 0:
            return np.zeros(0, dtype=np.int64)
        length = np.linalg.norm(v2 - v1, axis=1)
        n = np.ceil(length / radius).astype(np.int64) + 1
        owner = np.repeat(np.arange(len(v1)), n)
        offsets = np.cumsum(n) - n
        t = (np.arange(len(owner)) - offsets[owner]) / np.maximum(n[owner] - 1, 1)
        samples = v1[owner] + t[:, None] * (v2[owner] - v1[owner])
        spacing = float(np.max(length / np.maximum(n - 1, 1)))
        hits = self.node_tree.query_ball_point(samples, radius + 0.5 * spacing + 1e-12)
        if len(hits) == 0:
            return np.zeros(0, dtype=np.int64)
        candidates = np.unique(np.concatenate([np.asarray(h, dtype=np.int64) for h in hits]))
        candidates = candidates[self.active[candidates]]
        if len(candidates) == 0:
            return candidates
        x = self.mesh.nodes[candidates]
        dist = np.min(segment_distance(x[:, None, :], v1[None, :, :], v2[None, :, :]), axis=1)
        return candidates[dist <= radius]

    def _face_band(self, seed: int, reach: float, k: int) -> np.ndarray:
        """Vertices near the domain boundary whose face ribs may involve ``seed``."""
        if not self.foam.boundary_faces:
            return np.zeros(0, dtype=np.int64)
        band = np.nonzero(self.active & (np.abs(self.mesh.node_domain_phi) <= reach))[0]
        if len(band) == 0:
            return band
        # face ribs take the two nearest seeds; a move can swap the second and third
        _, nearest = self.seed_tree.query(self.mesh.nodes[band], k=min(k, self.n_seeds))
        nearest = nearest.reshape(len(band), -1)
        return band[np.any(nearest == seed, axis=1)]

    def _patch(self, points: np.ndarray, seed: int) -> np.ndarray:
        """Seeds that fix every beam within reach of ``points`` under a move of ``seed`` by the step."""
        rho = self.foam.influence_radius(self.r_max)
        d1, _ = self.seed_tree.query(points)
        hits = self.seed_tree.query_ball_point(points, d1 + 2.0 * rho + 2.0 * self.step + 1e-12)
        ids = np.unique(np.concatenate([np.asarray(h, dtype=np.int64) for h in hits] + [np.array([seed])]))
        if len(ids) < self.dim + 2:
            _, ids = self.seed_tree.query(self.seeds.positions[seed], k=min(self.n_seeds, self.dim + 2))
            ids = np.sort(np.atleast_1d(ids))
        return ids

    def _difference(self, variable, vertices, h_plus, h_minus, forward, h_base, back=None):
        back = self.step if back is None else back
        values = (h_plus - h_minus) / (self.step + back)
        if forward.any():
            values[forward] = (h_plus[forward] - h_base) / self.step
        keep = values != 0.0
        return DensityJacobianSlice(variable, vertices[keep], values[keep], int(forward.sum()))

    def _position_slice(self, variable: int, seed: int, axis: int) -> DensityJacobianSlice:
        reach = self.foam.influence_radius(self.r_max) + self.step
        cell = self.full_graph.cell_edges(seed)
        v1, v2 = self.full_graph.segments()
        vertices = np.union1d(self._vertices_near(v1[cell], v2[cell], reach), self._face_band(seed, reach, 3))
        if len(vertices) == 0:
            return DensityJacobianSlice.empty(variable)
        points = self.mesh.nodes[vertices]
        ids = self._patch(points, seed)
        local = int(np.searchsorted(ids, seed))
        base = SeedSet(self.seeds.positions[ids], self.seeds.radii[ids])
        phi = {}
        degenerate = np.zeros(len(vertices), dtype=bool)
        for sign in (1.0, -1.0):
            moved = base.positions.copy()
            moved[local, axis] += sign * self.step
            phi[sign], bad = self.evaluator.phi(points, base.replace(positions=moved))
            degenerate |= bad
        domain_phi = self.mesh.node_domain_phi[vertices]
        h_plus = node_density(phi[1.0], domain_phi, self.foam.eps, self.foam.alpha)[0]
        h_minus = node_density(phi[-1.0], domain_phi, self.foam.eps, self.foam.alpha)[0]
        forward = self.flags[vertices] | degenerate
        h_base = None
        if forward.any():
            phi0, _ = self.evaluator.phi(points[forward], base)
            h_base = node_density(phi0, domain_phi[forward], self.foam.eps, self.foam.alpha)[0]
        return self._difference(variable, vertices, h_plus, h_minus, forward, h_base)

    def _radius_slice(self, variable: int, seed: int) -> DensityJacobianSlice:
        reach = self.foam.influence_radius(self.r_max)
        cell = self.graph.cell_edges(seed)
        v1, v2 = self.graph.segments()
        vertices = np.union1d(self._vertices_near(v1[cell], v2[cell], reach), self._face_band(seed, reach, 2))
        if len(vertices) == 0:
            return DensityJacobianSlice.empty(variable)
        points = self.mesh.nodes[vertices]
        lo, hi = points.min(axis=0) - reach, points.max(axis=0) + reach
        near = np.all((np.minimum(v1, v2) <= hi) & (np.maximum(v1, v2) >= lo), axis=1)
        domain_phi = self.mesh.node_domain_phi[vertices]
        h = {}
        # radii stay positive: the backward step shrinks to half the radius at most
        back = min(self.step, 0.5 * float(self.seeds.radii[seed]))
        for sign, delta in ((1.0, self.step), (-1.0, -back)):
            radii = self.seeds.radii.copy()
            radii[seed] += delta
            moved = self.seeds.replace(radii=radii)
            foam = self.foam.with_graph(self.graph.with_radii(radii).subset(near), moved)
            h[sign] = node_density(foam.phi(points), domain_phi, self.foam.eps, self.foam.alpha)[0]
        forward = np.zeros(len(vertices), dtype=bool)
        return self._difference(variable, vertices, h[1.0], h[-1.0], forward, None, back)

    def slice(self, variable: int) -> DensityJacobianSlice:
        seed, axis = decode_variable(variable, self.n_seeds, self.dim)
        if axis is None:
            return self._radius_slice(variable, seed)
        return self._position_slice(variable, seed, axis)

    def slices(self, variables: Optional[Sequence[int]] = None) -> List[DensityJacobianSlice]:
        variables = range(self.n_variables) if variables is None else variables
        if self.n_threads == 1:
            result = [self.slice(a) for a in variables]
        else:
            with ThreadPoolExecutor(max_workers=self.n_threads) as pool:
                result = list(pool.map(self.slice, variables))
        flagged = sum(1 for s in result if s.flagged)
        if flagged:
            logging.warning(f"{flagged} variable(s) used forward differences near critical Voronoi configurations")
        return result


def density_derivative(
    variable: int,
    step: float,
    foam,
    seeds: SeedSet,
    mesh,
    domain,
    box,
    clip_length: float,
    full_graph: Optional[VoronoiGraph] = None,
    graph: Optional[VoronoiGraph] = None,
    **kwargs,
) -> DensityJacobianSlice:
    """Slice of one variable; prefer ``DensitySensitivity`` for many variables.

    Missing diagrams are rebuilt from ``seeds``.
    """
    if full_graph is None:
        full_graph = tessellate(seeds, box)
    if graph is None:
        graph = clip(full_graph, domain, clip_length)
    return DensitySensitivity(
        seeds, full_graph, graph, foam, mesh, domain, box, clip_length, step=step, **kwargs
    ).slice(variable)
