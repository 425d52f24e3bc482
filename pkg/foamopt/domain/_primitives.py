"""Analytic and sampled design domains.

Every domain exposes ``phi(points)``, a signed distance that is positive
inside, zero on the boundary and negative outside.
"""
from typing import List, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from foamopt.errors import ConfigError
from foamopt.utils.savenload import load_file


class DomainField:
    """Base class of design domains."""

    dim: int

    def phi(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def diagonal(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def inside(self, points: np.ndarray) -> np.ndarray:
        return self.phi(points) > 0.0

    def _as_points(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim == 1:
            points = points[None, :]
        if points.shape[-1] != self.dim:
            raise ValueError(
                f"{type(self).__name__} is {self.dim}D, got points of shape {points.shape}"
            )
        return points


class Box(DomainField):
    """Axis-aligned box ``[lo, hi]``."""

    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ConfigError("Box needs `lo` and `hi` of the same length")
        if self.lo.shape[0] not in (2, 3):
            raise ConfigError(f"Box must be 2D or 3D, got {self.lo.shape[0]} coordinates")
        if np.any(self.hi <= self.lo):
            raise ConfigError(f"Box with empty interior: lo={lo}, hi={hi}")
        self.dim = self.lo.shape[0]

    def phi(self, points):
        points = self._as_points(points)
        center = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo)
        q = np.abs(points - center) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(q.max(axis=-1), 0.0)
        return -(outside + inside)

    def bbox(self):
        return self.lo.copy(), self.hi.copy()


class Sphere(DomainField):
    """Ball of ``radius`` around ``center`` (a disk when ``center`` is 2D)."""

    def __init__(self, center: Sequence[float], radius: float):
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        if self.center.ndim != 1 or self.center.shape[0] not in (2, 3):
            raise ConfigError("Sphere center must have 2 or 3 coordinates")
        if self.radius <= 0:
            raise ConfigError(f"Sphere radius must be positive, got {radius}")
        self.dim = self.center.shape[0]

    def phi(self, points):
        points = self._as_points(points)
        return self.radius - np.linalg.norm(points - self.center, axis=-1)

    def bbox(self):
        return self.center - self.radius, self.center + self.radius


class Cylinder(DomainField):
    """Capped 3D cylinder aligned with coordinate ``axis``."""

    def __init__(
        self, center: Sequence[float], radius: float, height: float, axis: int = 2
    ):
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self.height = float(height)
        self.axis = int(axis)
        if self.center.shape != (3,):
            raise ConfigError("Cylinder is 3D; center needs 3 coordinates")
        if self.radius <= 0 or self.height <= 0:
            raise ConfigError("Cylinder radius and height must be positive")
        if self.axis not in (0, 1, 2):
            raise ConfigError(f"Cylinder axis must be 0, 1 or 2, got {axis}")
        self.dim = 3

    def phi(self, points):
        points = self._as_points(points)
        rel = points - self.center
        radial_axes = [a for a in range(3) if a != self.axis]
        q = np.stack(
            [
                np.linalg.norm(rel[:, radial_axes], axis=-1) - self.radius,
                np.abs(rel[:, self.axis]) - 0.5 * self.height,
            ],
            axis=-1,
        )
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(q.max(axis=-1), 0.0)
        return -(outside + inside)

    def bbox(self):
        half = np.full(3, self.radius)
        half[self.axis] = 0.5 * self.height
        return self.center - half, self.center + half


class Union(DomainField):
    """Union of child domains, ``phi = max`` of the children."""

    def __init__(self, children: List[DomainField]):
        if len(children) == 0:
            raise ConfigError("Union needs at least one child domain")
        dims = {c.dim for c in children}
        if len(dims) != 1:
            raise ConfigError(f"Union children mix dimensions {sorted(dims)}")
        self.children = list(children)
        self.dim = dims.pop()

    def phi(self, points):
        points = self._as_points(points)
        return np.max(np.stack([c.phi(points) for c in self.children]), axis=0)

    def bbox(self):
        boxes = [c.bbox() for c in self.children]
        lo = np.min(np.stack([b[0] for b in boxes]), axis=0)
        hi = np.max(np.stack([b[1] for b in boxes]), axis=0)
        return lo, hi


class SDFGrid(DomainField):
    """Signed distance sampled on a regular grid.

    The ``.npz`` file holds ``values`` (positive inside, shape ``n_x, n_y[, n_z]``),
    ``origin`` and ``spacing``. Values are interpolated (bi/tri)linearly; beyond the
    grid the distance to the grid box is subtracted.
    """

    def __init__(self, file: str):
        data = load_file(supported_formats={"npz": "npz"}, filename=file)
        try:
            values = np.asarray(data["values"], dtype=np.float64)
            origin = np.asarray(data["origin"], dtype=np.float64).reshape(-1)
            spacing = np.asarray(data["spacing"], dtype=np.float64).reshape(-1)
        except KeyError as e:
            raise ConfigError(f"SDF grid file {file} misses array {e}") from e
        self.dim = values.ndim
        if self.dim not in (2, 3) or origin.shape[0] != self.dim:
            raise ConfigError(
                f"SDF grid file {file}: values of shape {values.shape} do not match origin {origin}"
            )
        if spacing.shape[0] == 1:
            spacing = np.repeat(spacing, self.dim)
        self.file = file
        self.values = values
        self.origin = origin
        self.spacing = spacing
        axes = [origin[a] + spacing[a] * np.arange(values.shape[a]) for a in range(self.dim)]
        self._lo = np.array([ax[0] for ax in axes])
        self._hi = np.array([ax[-1] for ax in axes])
        self._interp = RegularGridInterpolator(axes, values, method="linear")

    def phi(self, points):
        points = self._as_points(points)
        clamped = np.clip(points, self._lo, self._hi)
        return self._interp(clamped) - np.linalg.norm(points - clamped, axis=-1)

    def bbox(self):
        inside = self.values > 0
        if not inside.any():
            return self._lo.copy(), self._hi.copy()
        idx = np.argwhere(inside)
        lo = self.origin + self.spacing * np.maximum(idx.min(axis=0) - 1, 0)
        hi = self.origin + self.spacing * np.minimum(
            idx.max(axis=0) + 1, np.array(self.values.shape) - 1
        )
        return lo, hi
