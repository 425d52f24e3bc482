"""Generalized barycentric coordinates of segments and planar polygons."""
from typing import Tuple

import numpy as np

_EDGE_RTOL = 1e-12


def segment_coordinates(segment: np.ndarray, points: np.ndarray, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """``(1 - t, t)`` of the projections of ``points`` onto ``segment``.

    Returns:
        ``(weights (n, 2), outside (n,))``
    """
    a, b = segment[0], segment[1]
    ab = b - a
    t = (points - a) @ ab / (ab @ ab)
    return np.stack([1.0 - t, t], axis=1), (t < -tol) | (t > 1.0 + tol)


def face_frame(polygon: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Origin and ``(2, 3)`` in-plane orthonormal axes of a planar 3D polygon."""
    nxt = np.roll(polygon, -1, axis=0)
    normal = np.sum(np.cross(polygon, nxt), axis=0)
    normal = normal / np.linalg.norm(normal)
    u = polygon[1] - polygon[0]
    u = u - (u @ normal) * normal
    u = u / np.linalg.norm(u)
    return polygon.mean(axis=0), np.stack([u, np.cross(normal, u)])


def mean_value_coordinates(polygon: np.ndarray, points: np.ndarray, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """Mean value coordinates of 2D ``points`` in a closed ``polygon`` ``(p, 2)``.

    Points on a vertex or on a side get the exact linear values. Points
    outside the polygon are extrapolated and flagged.

    Returns:
        ``(weights (n, p), outside (n,))``
    """
    polygon = np.asarray(polygon, dtype=np.float64)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n, p = points.shape[0], polygon.shape[0]
    scale = float(np.max(np.linalg.norm(polygon - polygon.mean(axis=0), axis=1)))
    s = polygon[None, :, :] - points[:, None, :]
    s1 = np.roll(s, -1, axis=1)
    r = np.linalg.norm(s, axis=2)
    r1 = np.roll(r, -1, axis=1)
    area = 0.5 * (s[..., 0] * s1[..., 1] - s[..., 1] * s1[..., 0])
    dot = np.einsum("nkd,nkd->nk", s, s1)

    weights = np.zeros((n, p))
    done = np.zeros(n, dtype=bool)

    on_vertex = r <= _EDGE_RTOL * scale
    hit = on_vertex.any(axis=1)
    weights[hit] = on_vertex[hit].astype(np.float64)
    weights[hit] /= weights[hit].sum(axis=1, keepdims=True)
    done |= hit

    on_side = (np.abs(area) <= _EDGE_RTOL * scale**2) & (dot < 0) & ~done[:, None]
    hit = on_side.any(axis=1)
    for i in np.nonzero(hit)[0]:
        k = int(np.argmax(on_side[i]))
        total = r[i, k] + r1[i, k]
        weights[i, k] = r1[i, k] / total
        weights[i, (k + 1) % p] = r[i, k] / total
    done |= hit

    rest = ~done
    if rest.any():
        # tan of the half angle, signed with the orientation
        t = 2.0 * area[rest] / (r[rest] * r1[rest] + dot[rest])
        w = (np.roll(t, 1, axis=1) + t) / r[rest]
        weights[rest] = w / w.sum(axis=1, keepdims=True)

    orientation = np.sign(np.sum(polygon[:, 0] * np.roll(polygon[:, 1], -1) - np.roll(polygon[:, 0], -1) * polygon[:, 1]))
    sides = np.roll(polygon, -1, axis=0) - polygon
    lengths = np.linalg.norm(sides, axis=1)
    signed = orientation * (sides[None, :, 0] * (points[:, None, 1] - polygon[None, :, 1]) - sides[None, :, 1] * (points[:, None, 0] - polygon[None, :, 0]))
    outside = np.any(signed < -tol * lengths * scale, axis=1)
    return weights, outside


def polygon_coordinates(polygon: np.ndarray, points: np.ndarray, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """Barycentric coordinates on a side (``p = 2``) or on a 2D / planar 3D polygon."""
    polygon = np.asarray(polygon, dtype=np.float64)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if polygon.shape[0] == 2:
        return segment_coordinates(polygon, points, tol)
    if polygon.shape[1] == 3:
        origin, axes = face_frame(polygon)
        return mean_value_coordinates((polygon - origin) @ axes.T, (points - origin) @ axes.T, tol)
    return mean_value_coordinates(polygon, points, tol)
