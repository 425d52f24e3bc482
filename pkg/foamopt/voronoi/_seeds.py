from typing import Optional, Sequence

import numpy as np

from foamopt.utils.savenload import save_file, load_file

_SEED_FORMATS = {"json": "json"}


class SeedSet:
    """Design variables of a foam: seed positions and per-seed radii.

    Args:
        positions: ``(N_s, d)`` seed coordinates
        radii: ``(N_s,)`` beam radii
        bbox_lo, bbox_hi: bounds of the positions as design variables
    """

    def __init__(
        self,
        positions,
        radii,
        bbox_lo: Optional[Sequence[float]] = None,
        bbox_hi: Optional[Sequence[float]] = None,
    ):
        positions = np.array(positions, dtype=np.float64, ndmin=2)
        radii = np.array(radii, dtype=np.float64).reshape(-1)
        if positions.ndim != 2 or positions.shape[1] not in (2, 3):
            raise ValueError(
                f"Seed positions must be an (N, 2) or (N, 3) array, got shape {positions.shape}"
            )
        if positions.shape[0] == 0:
            raise ValueError("A seed set needs at least one seed")
        if radii.shape[0] == 1 and positions.shape[0] > 1:
            radii = np.repeat(radii, positions.shape[0])
        if radii.shape[0] != positions.shape[0]:
            raise ValueError(
                f"{positions.shape[0]} seed positions but {radii.shape[0]} radii"
            )
        if bbox_lo is None:
            bbox_lo = positions.min(axis=0)
        if bbox_hi is None:
            bbox_hi = positions.max(axis=0)
        self.positions = positions
        self.radii = radii
        self.bbox_lo = np.asarray(bbox_lo, dtype=np.float64).reshape(-1)
        self.bbox_hi = np.asarray(bbox_hi, dtype=np.float64).reshape(-1)
        if self.bbox_lo.shape[0] != self.dim or self.bbox_hi.shape[0] != self.dim:
            raise ValueError("bbox_lo / bbox_hi must have one entry per coordinate")

    @property
    def n_seeds(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def __len__(self):
        return self.n_seeds

    def __repr__(self):
        return f"SeedSet(n_seeds={self.n_seeds}, dim={self.dim})"

    def copy(self) -> "SeedSet":
        return SeedSet(
            self.positions.copy(), self.radii.copy(), self.bbox_lo.copy(), self.bbox_hi.copy()
        )

    def replace(self, positions=None, radii=None) -> "SeedSet":
        """New seed set with the given positions and/or radii, same bounds."""
        return SeedSet(
            self.positions.copy() if positions is None else positions,
            self.radii.copy() if radii is None else radii,
            self.bbox_lo,
            self.bbox_hi,
        )

    def check_bounds(self, r_lo: float, r_hi: float, rtol: float = 1e-12) -> None:
        """Raise ``ValueError`` when a radius or position leaves its admissible range."""
        span = max(r_hi - r_lo, abs(r_hi), 1.0) * rtol
        bad = np.nonzero((self.radii < r_lo - span) | (self.radii > r_hi + span))[0]
        if len(bad) > 0:
            raise ValueError(
                f"Radii of seeds {bad[:10].tolist()} are outside [{r_lo:.4g}, {r_hi:.4g}]"
            )
        tol = rtol * max(float(np.max(self.bbox_hi - self.bbox_lo)), 1.0)
        out = np.nonzero(
            np.any(
                (self.positions < self.bbox_lo - tol) | (self.positions > self.bbox_hi + tol),
                axis=1,
            )
        )[0]
        if len(out) > 0:
            raise ValueError(f"Seeds {out[:10].tolist()} lie outside the design box")

    def as_dict(self) -> dict:
        return {
            "positions": self.positions.tolist(),
            "radii": self.radii.tolist(),
            "bbox_lo": self.bbox_lo.tolist(),
            "bbox_hi": self.bbox_hi.tolist(),
        }

    @classmethod
    def from_dict(cls, dictionary: dict) -> "SeedSet":
        missing = [k for k in ("positions", "radii") if k not in dictionary]
        if missing:
            raise KeyError(f"seed file misses {missing}")
        return cls(
            dictionary["positions"],
            dictionary["radii"],
            dictionary.get("bbox_lo", None),
            dictionary.get("bbox_hi", None),
        )

    def save(self, filename: str) -> str:
        return save_file(
            item=self.as_dict(), supported_formats=_SEED_FORMATS, filename=filename
        )

    @classmethod
    def load(cls, filename: str) -> "SeedSet":
        return cls.from_dict(load_file(supported_formats=_SEED_FORMATS, filename=filename))


def beam_radius(adjacent_seeds, radii) -> float:
    """Radius of a beam: mean radius of the seeds whose cells share the edge.

    ``radii`` is an array or a ``SeedSet``; ``-1`` entries of ``adjacent_seeds`` are padding.
    """
    if isinstance(radii, SeedSet):
        radii = radii.radii
    adjacent_seeds = np.asarray(adjacent_seeds, dtype=np.int64).reshape(-1)
    adjacent_seeds = adjacent_seeds[adjacent_seeds >= 0]
    if len(adjacent_seeds) == 0:
        raise ValueError("an edge needs at least one adjacent seed")
    return float(np.mean(np.asarray(radii, dtype=np.float64)[adjacent_seeds]))
