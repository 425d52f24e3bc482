import logging
import math
from typing import List, Optional, Tuple

import numpy as np
import torch
from scipy.spatial import cKDTree
from torch_runstats.scatter import scatter

from foamopt.voronoi import (
    SeedSet,
    VoronoiGraph,
    clip,
    tessellate,
    three_point_loci,
)
from ._field import beam_phi


class Beam:
    """Capsule around the segment ``[v1, v2]`` with radius ``rbar``."""

    def __init__(self, v1, v2, rbar: float, allow_degenerate: bool = False):
        self.v1 = np.asarray(v1, dtype=np.float64)
        self.v2 = np.asarray(v2, dtype=np.float64)
        self.rbar = float(rbar)
        if self.rbar <= 0:
            raise ValueError(f"Beam radius must be positive, got {rbar}")
        if self.degenerate and not allow_degenerate:
            raise ValueError("Beam end points coincide; pass allow_degenerate=True for a sphere")

    @property
    def degenerate(self) -> bool:
        return bool(np.all(self.v1 == self.v2))

    def phi(self, x) -> np.ndarray:
        return beam_phi(x, self)

    def __repr__(self):
        return f"Beam(v1={self.v1.tolist()}, v2={self.v2.tolist()}, rbar={self.rbar:.4g})"


def _torch(a) -> torch.Tensor:
    return torch.as_tensor(np.ascontiguousarray(a), dtype=torch.float64)


class ImplicitFoam:
    """Implicit field of a Voronoi foam: KS union of capsules plus boundary terms.

    The KS union is taken on values measured in units of ``ks_length``, so ``p``
    is dimensionless. Terms below ``floor`` are dropped; see ``floor``.

    Args:
        v1, v2: ``(B, d)`` beam end points
        rbar: ``(B,)`` beam radii
        eps: Heaviside half-bandwidth
        p: KS sharpness
        alpha: void density
        ks_length: length unit of the KS union
        ks_tol: relative weight below which a KS term is dropped
        domain: design domain, needed by the shell and the boundary faces
        shell: add the band ``shell_thickness - |phi_domain|``
        shell_thickness: thickness of the shell band
        boundary_faces: add Voronoi face ribs along the domain boundary
        seed_positions, seed_radii: seeds defining the boundary faces
    """

    def __init__(
        self,
        v1,
        v2,
        rbar,
        eps: float,
        p: float = 16.0,
        alpha: float = 1e-6,
        ks_length: float = 1.0,
        ks_tol: float = 1e-6,
        domain=None,
        shell: bool = False,
        shell_thickness: Optional[float] = None,
        boundary_faces: bool = False,
        seed_positions=None,
        seed_radii=None,
    ):
        self.v1 = np.asarray(v1, dtype=np.float64)
        self.v2 = np.asarray(v2, dtype=np.float64)
        self.rbar = np.asarray(rbar, dtype=np.float64).reshape(-1)
        if p <= 0:
            raise ValueError(f"KS sharpness p must be positive, got {p}")
        if eps <= 0:
            raise ValueError(f"Heaviside half-bandwidth eps must be positive, got {eps}")
        if not 0 < alpha < 1:
            raise ValueError(f"Void density alpha must be in (0, 1), got {alpha}")
        if np.any(self.rbar <= 0):
            raise ValueError("Beam radii must be positive")
        if (shell or boundary_faces) and domain is None:
            raise ValueError("shell and boundary faces need the design domain")
        if shell and (shell_thickness is None or shell_thickness <= 0):
            raise ValueError("shell needs a positive shell_thickness")
        if boundary_faces and (seed_positions is None or seed_radii is None):
            raise ValueError("boundary faces need the seed positions and radii")
        self.eps = float(eps)
        self.p = float(p)
        self.alpha = float(alpha)
        self.ks_length = float(ks_length)
        self.ks_tol = float(ks_tol)
        self.domain = domain
        self.shell = bool(shell)
        self.shell_thickness = None if shell_thickness is None else float(shell_thickness)
        self.boundary_faces = bool(boundary_faces)
        self.seed_positions = None if seed_positions is None else np.asarray(seed_positions, dtype=np.float64)
        self.seed_radii = None if seed_radii is None else np.asarray(seed_radii, dtype=np.float64)
        self._seed_tree = None

    @classmethod
    def from_graph(cls, graph: VoronoiGraph, seeds: Optional[SeedSet] = None, **kwargs) -> "ImplicitFoam":
        v1, v2 = graph.segments()
        if seeds is not None:
            kwargs.setdefault("seed_positions", seeds.positions)
            kwargs.setdefault("seed_radii", seeds.radii)
        return cls(v1, v2, graph.rbar, **kwargs)

    def settings(self) -> dict:
        return dict(
            eps=self.eps,
            p=self.p,
            alpha=self.alpha,
            ks_length=self.ks_length,
            ks_tol=self.ks_tol,
            domain=self.domain,
            shell=self.shell,
            shell_thickness=self.shell_thickness,
            boundary_faces=self.boundary_faces,
        )

    def with_graph(self, graph: VoronoiGraph, seeds: Optional[SeedSet] = None) -> "ImplicitFoam":
        """Same settings, beams of ``graph``."""
        kwargs = self.settings()
        if seeds is not None:
            kwargs.update(seed_positions=seeds.positions, seed_radii=seeds.radii)
        else:
            kwargs.update(seed_positions=self.seed_positions, seed_radii=self.seed_radii)
        return ImplicitFoam.from_graph(graph, **kwargs)

    def with_seeds(self, seeds: SeedSet) -> "ImplicitFoam":
        """Same beams and settings, boundary faces from ``seeds``."""
        kwargs = self.settings()
        kwargs.update(seed_positions=seeds.positions, seed_radii=seeds.radii)
        return ImplicitFoam(self.v1, self.v2, self.rbar, **kwargs)

    @property
    def n_beams(self) -> int:
        return self.rbar.shape[0]

    @property
    def dim(self) -> int:
        return self.v1.shape[1]

    @property
    def beams(self) -> List[Beam]:
        return [Beam(a, b, r, allow_degenerate=True) for a, b, r in zip(self.v1, self.v2, self.rbar)]

    @property
    def ks_margin(self) -> float:
        """Gap below the largest term beyond which a term weighs less than ``ks_tol``."""
        return self.ks_length * math.log(1.0 / self.ks_tol) / self.p

    @property
    def floor(self) -> float:
        """Smallest term value taken into the union; maps to the void density."""
        return -(self.eps + self.ks_margin)

    def influence_radius(self, r_max: Optional[float] = None) -> float:
        """Distance beyond which a beam of radius ``<= r_max`` cannot enter the union."""
        if r_max is None:
            r_max = float(self.rbar.max()) if self.n_beams else 0.0
        return r_max - self.floor

    # -- boundary terms --------------------------------------------------

    def _nearest_two(self, points: np.ndarray) -> np.ndarray:
        if self._seed_tree is None:
            self._seed_tree = cKDTree(self.seed_positions)
        _, ids = self._seed_tree.query(points, k=2)
        return ids

    def extra_terms(self, points: np.ndarray, nearest: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
        """``(P, m)`` shell and boundary-face values, ``None`` when both are off.

        Args:
            points: query points
            nearest: ``(P, >=2)`` seed ids sorted by distance, queried when ``None``
        """
        if not (self.shell or self.boundary_faces):
            return None
        points = np.atleast_2d(points)
        band = np.abs(self.domain.phi(points))
        columns = []
        if self.shell:
            columns.append(self.shell_thickness - band)
        if self.boundary_faces:
            if len(self.seed_positions) < 2:
                columns.append(np.full(len(points), -np.inf))
            else:
                ids = self._nearest_two(points) if nearest is None else np.asarray(nearest)[:, :2]
                xa = self.seed_positions[ids[:, 0]]
                xb = self.seed_positions[ids[:, 1]]
                gap = np.linalg.norm(xb - xa, axis=1)
                bisector = (
                    np.sum((points - xb) ** 2, axis=1) - np.sum((points - xa) ** 2, axis=1)
                ) / (2.0 * gap)
                half = 0.5 * (self.seed_radii[ids[:, 0]] + self.seed_radii[ids[:, 1]])
                columns.append(half - np.maximum(np.abs(bisector), band))
        return np.stack(columns, axis=1)

    # -- evaluation ------------------------------------------------------

    def _candidate_pairs(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(point, beam) pairs that may carry a term ``>= floor``."""
        reach = self.influence_radius()
        length = np.linalg.norm(self.v2 - self.v1, axis=1)
        n_samples = np.ceil(length / reach).astype(np.int64) + 1
        owner = np.repeat(np.arange(self.n_beams), n_samples)
        offsets = np.cumsum(n_samples) - n_samples
        t = (np.arange(len(owner)) - offsets[owner]) / np.maximum(n_samples[owner] - 1, 1)
        samples = self.v1[owner] + t[:, None] * (self.v2[owner] - self.v1[owner])
        spacing = float(np.max(length / np.maximum(n_samples - 1, 1)))
        found = cKDTree(points).sparse_distance_matrix(
            cKDTree(samples), reach + 0.5 * spacing + 1e-12, output_type="ndarray"
        )
        key = np.unique(found["i"].astype(np.int64) * self.n_beams + owner[found["j"]])
        return key // self.n_beams, key % self.n_beams

    def union(self, terms: torch.Tensor, index: torch.Tensor, n_points: int) -> torch.Tensor:
        """KS union of ``terms`` grouped by ``index`` with the floor rule."""
        floor = self.floor
        keep = terms >= floor
        terms, index = terms[keep], index[keep]
        scaled = terms / self.ks_length
        top = torch.full((n_points,), floor / self.ks_length, dtype=torch.float64)
        top = top.scatter_reduce_(0, index, scaled, reduce="amax")
        total = scatter(torch.exp(self.p * (scaled - top[index])), index, dim=0, dim_size=n_points)
        empty = total <= 0
        value = top + torch.log(torch.where(empty, torch.ones_like(total), total)) / self.p
        return torch.where(empty, torch.full_like(value, floor / self.ks_length), value) * self.ks_length

    def beam_terms(self, points: np.ndarray, pairs: Optional[Tuple[np.ndarray, np.ndarray]] = None):
        """Beam values of ``(point, beam)`` pairs as torch tensors ``(values, point index)``."""
        if pairs is None:
            pairs = self._candidate_pairs(points)
        q, b = pairs
        x = _torch(points[q])
        a = _torch(self.v2[b] - self.v1[b])
        d = x - _torch(self.v1[b])
        aa = (a * a).sum(-1)
        t = torch.clamp((a * d).sum(-1) / torch.where(aa > 0, aa, torch.ones_like(aa)), 0.0, 1.0)
        dist = torch.linalg.norm(d - t[:, None] * a, dim=-1)
        return _torch(self.rbar[b]) - dist, torch.as_tensor(q, dtype=torch.long)

    def phi(self, points, nearest: Optional[np.ndarray] = None) -> np.ndarray:
        """Foam field at ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n = points.shape[0]
        values, index = [], []
        if self.n_beams > 0 and n > 0:
            v, i = self.beam_terms(points)
            values.append(v)
            index.append(i)
        extra = self.extra_terms(points, nearest)
        if extra is not None:
            values.append(_torch(extra.T.reshape(-1)))
            index.append(torch.arange(n, dtype=torch.long).repeat(extra.shape[1]))
        if len(values) == 0:
            return np.full(n, self.floor)
        return self.union(torch.cat(values), torch.cat(index), n).numpy()

    def __repr__(self):
        return (
            f"ImplicitFoam(n_beams={self.n_beams}, p={self.p}, eps={self.eps:.4g}, "
            f"shell={self.shell}, boundary_faces={self.boundary_faces})"
        )


def shell_and_faces(x, foam: ImplicitFoam) -> List[float]:
    """Shell and boundary-face values of ``foam`` at the single point ``x``."""
    extra = foam.extra_terms(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    if extra is None:
        return []
    return [float(v) for v in extra[0] if v >= foam.floor]


def foam_from_seeds(
    seeds: SeedSet,
    domain,
    box,
    l_a: float,
    **foam_kwargs,
) -> Tuple[VoronoiGraph, VoronoiGraph, ImplicitFoam]:
    """Tessellate, clip and wrap ``seeds`` into an implicit foam.

    Returns:
        ``(unclipped graph, clipped graph, foam)``
    """
    full = tessellate(seeds, box)
    clipped = clip(full, domain, l_a)
    foam_kwargs.setdefault("ks_length", l_a)
    foam = ImplicitFoam.from_graph(clipped, seeds, domain=domain, **foam_kwargs)
    logging.debug(f"foam with {clipped.n_edges} beams from {full.n_edges} Voronoi edges")
    return full, clipped, foam


class LocalFoamEvaluator:
    """Foam field at points from local Voronoi geometry only.

    A point whose ``k`` nearest seeds satisfy ``r_max <= 2 r_min`` is evaluated
    with the three-point locus of its nearest seeds; other points use the
    diagram of the given seed subset.

    Args:
        foam: foam providing the field settings
        domain: design domain
        box: truncation box of the diagrams
        l_a: clipping sample length
        k: size of the nearest-seed set of the branch test
        three_point: enable the three-point branch
    """

    def __init__(self, foam: ImplicitFoam, domain, box, l_a: float, k: int = 16, three_point: bool = True):
        self.foam = foam
        self.domain = domain
        self.box = box
        self.l_a = l_a
        self.k = k
        self.three_point = three_point

    def three_point_mask(self, radii: np.ndarray, nearest: np.ndarray) -> np.ndarray:
        if not self.three_point:
            return np.zeros(nearest.shape[0], dtype=bool)
        r = radii[nearest]
        return r.max(axis=1) <= 2.0 * r.min(axis=1)

    def phi(self, points: np.ndarray, seeds: SeedSet) -> Tuple[np.ndarray, np.ndarray]:
        """Field at ``points`` from the seeds ``seeds``.

        Returns:
            ``(phi, degenerate)``: field values and a mask of points whose
            three-point locus is degenerate (these fall back to the diagram)
        """
        points = np.atleast_2d(points)
        n = points.shape[0]
        dim = seeds.dim
        k = min(self.k, seeds.n_seeds)
        _, nearest = cKDTree(seeds.positions).query(points, k=k)
        nearest = nearest.reshape(n, k)
        phi = np.empty(n)
        degenerate = np.zeros(n, dtype=bool)
        approx = self.three_point_mask(seeds.radii, nearest) & (seeds.n_seeds >= dim)
        if approx.any():
            dist, _, bad = three_point_loci(points[approx], seeds.positions, nearest[approx])
            ids = np.nonzero(approx)[0]
            degenerate[ids[bad]] = True
            approx[ids[bad]] = False
            ids, dist = ids[~bad], dist[~bad]
            rbar = seeds.radii[nearest[ids, :dim]].mean(axis=1)
            terms = [_torch(rbar - dist)]
            index = [torch.arange(len(ids), dtype=torch.long)]
            # ``nearest`` indexes ``seeds``, not the seeds the foam was built from
            extra = self.foam.with_seeds(seeds).extra_terms(points[ids], nearest[ids])
            if extra is not None:
                terms.append(_torch(extra.T.reshape(-1)))
                index.append(torch.arange(len(ids), dtype=torch.long).repeat(extra.shape[1]))
            phi[ids] = self.foam.union(torch.cat(terms), torch.cat(index), len(ids)).numpy()
        rest = ~approx
        if rest.any():
            graph = clip(tessellate(seeds, self.box), self.domain, self.l_a)
            local = self.foam.with_graph(graph, seeds)
            phi[rest] = local.phi(points[rest], nearest[rest] if k >= 2 else None)
        return phi, degenerate


def foam_phi(x, foam: ImplicitFoam, seeds: Optional[SeedSet] = None, evaluator: Optional[LocalFoamEvaluator] = None) -> float:
    """Foam field at the single point ``x``.

    With an ``evaluator`` and ``seeds`` the value comes from local geometry,
    otherwise from the beams of ``foam``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if evaluator is None or seeds is None:
        return float(foam.phi(x)[0])
    return float(evaluator.phi(x, seeds)[0][0])

