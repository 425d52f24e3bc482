from collections import OrderedDict
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from foamopt.voronoi import SeedSet

TRACE_FIELDS = ["iter", "C", "S", "J", "V_frac", "ch", "seconds", "flagged"]


class OptProblem:
    """Bounds, weights and scaling of a foam design problem.

    The optimizer works on ``x`` in the unit box: positions are normalized to
    the design box and radii to ``[r_lo, r_hi]``.

    Args:
        n_seeds, dim: size of the design
        bbox_lo, bbox_hi: design box of the positions
        r_lo, r_hi: radius bounds
        w: weight of the shape energy in the objective
        v: upper bound of the volume fraction
        optimize_positions, optimize_radii: which variable groups are free
    """

    def __init__(
        self,
        n_seeds: int,
        dim: int,
        bbox_lo: Sequence[float],
        bbox_hi: Sequence[float],
        r_lo: float,
        r_hi: float,
        w: float = 0.1,
        v: float = 0.3,
        optimize_positions: bool = True,
        optimize_radii: bool = True,
    ):
        self.n_seeds = int(n_seeds)
        self.dim = int(dim)
        self.bbox_lo = np.asarray(bbox_lo, dtype=np.float64).reshape(-1)
        self.bbox_hi = np.asarray(bbox_hi, dtype=np.float64).reshape(-1)
        self.r_lo = float(r_lo)
        self.r_hi = float(r_hi)
        self.w = float(w)
        self.v = float(v)
        self.optimize_positions = bool(optimize_positions)
        self.optimize_radii = bool(optimize_radii)
        if self.n_seeds < 1:
            raise ValueError(f"need at least one seed, got {n_seeds}")
        if len(self.bbox_lo) != self.dim or len(self.bbox_hi) != self.dim:
            raise ValueError("design box must have one bound per coordinate")
        if np.any(self.bbox_lo > self.bbox_hi):
            raise ValueError("design box has lo > hi")
        if not 0.0 < self.r_lo <= self.r_hi:
            raise ValueError(f"radius bounds need 0 < r_lo <= r_hi, got [{r_lo}, {r_hi}]")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"objective weight w must be in [0, 1], got {w}")
        if not 0.0 < self.v <= 1.0:
            raise ValueError(f"volume fraction v must be in (0, 1], got {v}")
        if not (self.optimize_positions or self.optimize_radii):
            raise ValueError("at least one of optimize_positions / optimize_radii must be on")

    def __repr__(self):
        return (
            f"OptProblem(n_seeds={self.n_seeds}, dim={self.dim}, n_variables={self.n_variables}, "
            f"w={self.w:g}, v={self.v:g}, r=[{self.r_lo:.4g}, {self.r_hi:.4g}])"
        )

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def variables(self) -> np.ndarray:
        """Free variable ids in the ``(X flattened, r)`` order."""
        ids = []
        if self.optimize_positions:
            ids.append(np.arange(self.n_seeds * self.dim))
        if self.optimize_radii:
            ids.append(self.n_seeds * self.dim + np.arange(self.n_seeds))
        return np.concatenate(ids)

    def _span(self) -> np.ndarray:
        parts = []
        if self.optimize_positions:
            parts.append(np.tile(self.bbox_hi - self.bbox_lo, self.n_seeds))
        if self.optimize_radii:
            parts.append(np.full(self.n_seeds, self.r_hi - self.r_lo))
        return np.maximum(np.concatenate(parts), 1e-300)

    def _offset(self) -> np.ndarray:
        parts = []
        if self.optimize_positions:
            parts.append(np.tile(self.bbox_lo, self.n_seeds))
        if self.optimize_radii:
            parts.append(np.full(self.n_seeds, self.r_lo))
        return np.concatenate(parts)

    @property
    def lower(self) -> np.ndarray:
        return np.zeros(self.n_variables)

    @property
    def upper(self) -> np.ndarray:
        return np.ones(self.n_variables)

    def encode(self, seeds: SeedSet) -> np.ndarray:
        """Normalized design vector of ``seeds``, clipped to the unit box."""
        parts = []
        if self.optimize_positions:
            parts.append(seeds.positions.reshape(-1))
        if self.optimize_radii:
            parts.append(seeds.radii)
        return np.clip((np.concatenate(parts) - self._offset()) / self._span(), 0.0, 1.0)

    def decode(self, x: np.ndarray, seeds: SeedSet) -> SeedSet:
        """Seeds with the free variables taken from ``x``; frozen ones from ``seeds``."""
        z = self._offset() + self._span() * np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
        positions, radii = seeds.positions.copy(), seeds.radii.copy()
        n = 0
        if self.optimize_positions:
            n = self.n_seeds * self.dim
            positions = z[:n].reshape(self.n_seeds, self.dim)
        if self.optimize_radii:
            radii = z[n:]
        return SeedSet(positions, radii, self.bbox_lo, self.bbox_hi)

    def scale_gradient(self, gradient: np.ndarray) -> np.ndarray:
        """Chain rule from physical to normalized variables."""
        return np.asarray(gradient, dtype=np.float64) * self._span()

    def clamp(self, seeds: SeedSet) -> SeedSet:
        """``seeds`` with positions and radii projected onto the bounds."""
        return SeedSet(
            np.clip(seeds.positions, self.bbox_lo, self.bbox_hi),
            np.clip(seeds.radii, self.r_lo, self.r_hi),
            self.bbox_lo,
            self.bbox_hi,
        )

    def as_dict(self) -> dict:
        return dict(
            n_seeds=self.n_seeds,
            dim=self.dim,
            bbox_lo=self.bbox_lo.tolist(),
            bbox_hi=self.bbox_hi.tolist(),
            r_lo=self.r_lo,
            r_hi=self.r_hi,
            w=self.w,
            v=self.v,
            optimize_positions=self.optimize_positions,
            optimize_radii=self.optimize_radii,
        )


def cell_length(V0: float, n_seeds: int, dim: int) -> float:
    """Mean cell size ``(|domain| / N_s)^(1/d)``."""
    return (V0 / n_seeds) ** (1.0 / dim)


def build_problem(
    domain,
    n_seeds: int,
    l_a: float,
    V0: float,
    w: float = 0.1,
    v: float = 0.3,
    design_margin: float = 0.25,
    radius_min_factor: float = 2.0,
    radius_max: Optional[float] = None,
    optimize_positions: bool = True,
    optimize_radii: bool = True,
) -> OptProblem:
    """Problem with the design box grown by ``design_margin`` domain diagonals
    and radii bounded by ``radius_min_factor * l_a`` and ``radius_max``
    (default ``max(2 r_lo, l_cell / 4)``)."""
    lo, hi = domain.bbox()
    margin = design_margin * domain.diagonal
    r_lo = radius_min_factor * l_a
    if radius_max is None:
        radius_max = max(2.0 * r_lo, 0.25 * cell_length(V0, n_seeds, len(lo)))
    return OptProblem(
        n_seeds,
        len(lo),
        np.asarray(lo) - margin,
        np.asarray(hi) + margin,
        r_lo,
        radius_max,
        w=w,
        v=v,
        optimize_positions=optimize_positions,
        optimize_radii=optimize_radii,
    )


class OptTrace:
    """Per-iteration records of an optimization run."""

    def __init__(self, records: Optional[List[Dict[str, float]]] = None):
        self.records = [] if records is None else [dict(r) for r in records]

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def append(self, **record) -> Dict[str, float]:
        missing = [k for k in TRACE_FIELDS if k not in record]
        if missing:
            raise KeyError(f"trace record misses {missing}")
        self.records.append({k: record[k] for k in TRACE_FIELDS})
        return self.records[-1]

    def column(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.records], dtype=np.float64)

    @staticmethod
    def header() -> str:
        return ", ".join(TRACE_FIELDS)

    @staticmethod
    def row(record: Mapping) -> str:
        return (
            f"{int(record['iter']):d}, {record['C']:.10g}, {record['S']:.10g}, {record['J']:.10g}, "
            f"{record['V_frac']:.10g}, {record['ch']:.10g}, {record['seconds']:.4f}, {int(record['flagged']):d}"
        )

    def sparkline(self, key: str = "J", width: int = 60) -> str:
        """Plain text sparkline of one column, resampled to at most ``width`` characters."""
        ticks = " .:-=+*#%@"
        values = self.column(key)
        if len(values) == 0:
            return ""
        if len(values) > width:
            values = values[np.linspace(0, len(values) - 1, width).round().astype(np.int64)]
        lo, hi = float(values.min()), float(values.max())
        if hi - lo <= 0.0:
            return ticks[len(ticks) // 2] * len(values)
        index = np.round((values - lo) / (hi - lo) * (len(ticks) - 1)).astype(np.int64)
        return "".join(ticks[i] for i in index)

    def state_dict(self) -> "OrderedDict[str, object]":
        return OrderedDict([("records", [dict(r) for r in self.records])])

    def load_state_dict(self, state_dict: Mapping) -> None:
        self.records = [dict(r) for r in state_dict["records"]]
