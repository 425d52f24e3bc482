"""Scalar building blocks of the implicit foam field.

All functions accept numpy arrays and broadcast over leading dimensions.
"""
import numpy as np


def segment_distance(x, v1, v2) -> np.ndarray:
    """Distance from ``x`` to the segment ``[v1, v2]``.

    A segment with coincident end points is a point.
    """
    x = np.asarray(x, dtype=np.float64)
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    a = v2 - v1
    b = x - v1
    aa = np.sum(a * a, axis=-1)
    ab = np.sum(a * b, axis=-1)
    t = np.clip(ab / np.where(aa > 0, aa, 1.0), 0.0, 1.0)
    t = np.where(aa > 0, t, 0.0)
    return np.linalg.norm(b - t[..., None] * a, axis=-1)


def beam_phi(x, beam) -> np.ndarray:
    """Signed field of a capsule, positive inside."""
    return beam.rbar - segment_distance(x, beam.v1, beam.v2)


def ks_union(values, p: float = 16.0, floor=None, axis: int = -1) -> np.ndarray:
    """Kreisselmeier-Steinhauser union ``max + log(sum exp(p (v - max))) / p``.

    With ``floor`` only values ``>= floor`` take part, and the result is ``floor``
    where none does.
    """
    values = np.asarray(values, dtype=np.float64)
    if p <= 0:
        raise ValueError(f"KS sharpness must be positive, got {p}")
    if floor is not None:
        values = np.where(values >= floor, values, -np.inf)
    if values.shape[axis] == 0:
        raise ValueError("ks_union needs at least one value")
    vmax = np.max(values, axis=axis, keepdims=True)
    finite = np.isfinite(vmax)
    shifted = np.where(finite, values - np.where(finite, vmax, 0.0), -np.inf)
    with np.errstate(divide="ignore"):
        out = np.squeeze(vmax, axis=axis) + np.log(np.sum(np.exp(shifted), axis=axis)) / p
    if floor is not None:
        out = np.where(np.isfinite(out), out, floor)
    return out


def heaviside(phi, eps: float, alpha: float = 1e-6) -> np.ndarray:
    """Regularized Heaviside ramp from ``alpha`` (``phi <= -eps``) to 1 (``phi >= eps``)."""
    if eps <= 0:
        raise ValueError(f"Heaviside half-bandwidth must be positive, got {eps}")
    phi = np.asarray(phi, dtype=np.float64)
    s = np.clip(phi / eps, -1.0, 1.0)
    ramp = 0.75 * (1.0 - alpha) * (s - s ** 3 / 3.0) + 0.5 * (1.0 + alpha)
    return np.where(phi >= eps, 1.0, np.where(phi <= -eps, alpha, ramp))


def heaviside_derivative(phi, eps: float, alpha: float = 1e-6) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    s = phi / eps
    return np.where(np.abs(s) <= 1.0, 0.75 * (1.0 - alpha) * (1.0 - s ** 2) / eps, 0.0)
