"""Initial designs: seed sampling inside the domain and uniform-radius calibration."""
import logging
from typing import Callable, Optional, Sequence

import numpy as np

from foamopt.voronoi import SeedSet

STRATEGIES = ("uniform", "blue_noise")

# dart-throwing disk radius relative to (|domain| / N_s)^(1/d)
_BLUE_NOISE_FACTOR = {2: 0.7, 3: 0.6}


def _bbox_volume(lo, hi) -> float:
    return float(np.prod(np.asarray(hi) - np.asarray(lo)))


def sample_uniform(domain, n_seeds: int, rng: np.random.Generator, batch: int = 1024, max_batches: int = 1000) -> np.ndarray:
    """Rejection sampling of ``n_seeds`` points inside ``domain``."""
    lo, hi = domain.bbox()
    accepted = []
    count = 0
    for _ in range(max_batches):
        candidates = rng.uniform(lo, hi, size=(max(batch, n_seeds), len(lo)))
        inside = candidates[domain.inside(candidates)]
        accepted.append(inside)
        count += len(inside)
        if count >= n_seeds:
            return np.concatenate(accepted)[:n_seeds]
    raise ValueError(f"could only place {count} of {n_seeds} seeds inside the domain, is it empty?")


def sample_blue_noise(
    domain,
    n_seeds: int,
    rng: np.random.Generator,
    radius: Optional[float] = None,
    max_attempts: int = 30,
) -> Optional[np.ndarray]:
    """Dart throwing: uniform candidates kept when farther than ``radius`` from every accepted seed.

    Returns ``None`` when ``n_seeds`` darts do not fit within ``max_attempts * n_seeds`` candidates.
    """
    lo, hi = domain.bbox()
    dim = len(lo)
    if radius is None:
        probe = rng.uniform(lo, hi, size=(4096, dim))
        measure = _bbox_volume(lo, hi) * float(domain.inside(probe).mean())
        radius = _BLUE_NOISE_FACTOR[dim] * (measure / n_seeds) ** (1.0 / dim)
    accepted = np.empty((0, dim))
    budget = max_attempts * n_seeds
    while budget > 0 and len(accepted) < n_seeds:
        candidates = rng.uniform(lo, hi, size=(min(budget, 256), dim))
        budget -= len(candidates)
        for x in candidates[domain.inside(candidates)]:
            if len(accepted) == 0 or np.min(np.linalg.norm(accepted - x, axis=1)) > radius:
                accepted = np.vstack([accepted, x])
                if len(accepted) == n_seeds:
                    break
    return accepted if len(accepted) == n_seeds else None


def calibrate_radius(
    volume_fraction: Callable[[float], float],
    target: float,
    r_lo: float,
    r_hi: float,
    rtol: float = 1e-2,
    max_steps: int = 40,
) -> float:
    """Bisection on a uniform radius until ``volume_fraction(r)`` is within ``rtol`` of ``target``.

    The volume fraction grows with the radius; a target outside the reachable
    range returns the nearer bound with a warning.
    """
    lo_frac = volume_fraction(r_lo)
    if lo_frac >= target * (1 - rtol):
        if lo_frac > target * (1 + rtol):
            logging.warning(
                f"Smallest radius {r_lo:.4g} already gives V/V0 = {lo_frac:.4f} above the target {target:g}"
            )
        return r_lo
    hi_frac = volume_fraction(r_hi)
    if hi_frac <= target * (1 + rtol):
        if hi_frac < target * (1 - rtol):
            logging.warning(
                f"Largest radius {r_hi:.4g} only gives V/V0 = {hi_frac:.4f} below the target {target:g}"
            )
        return r_hi
    a, b = r_lo, r_hi
    r = 0.5 * (a + b)
    for _ in range(max_steps):
        r = 0.5 * (a + b)
        frac = volume_fraction(r)
        logging.debug(f"radius bisection: r = {r:.6g}, V/V0 = {frac:.6f}")
        if abs(frac - target) <= rtol * target:
            return r
        if frac < target:
            a = r
        else:
            b = r
    logging.warning(f"radius bisection stopped after {max_steps} steps at r = {r:.6g}")
    return r


def init_seeds(
    domain,
    n_seeds: int,
    seed: int = 0,
    strategy: str = "uniform",
    volume_fraction: Optional[Callable[[SeedSet], float]] = None,
    target: Optional[float] = None,
    r_lo: Optional[float] = None,
    r_hi: Optional[float] = None,
    bbox_lo: Optional[Sequence[float]] = None,
    bbox_hi: Optional[Sequence[float]] = None,
    rtol: float = 1e-2,
) -> SeedSet:
    """Sample an initial design inside ``domain``.

    Args:
        domain: design domain
        n_seeds: number of seeds
        seed: seed of the random generator; equal seeds give identical designs
        strategy: ``uniform`` rejection sampling or ``blue_noise`` dart throwing
        volume_fraction: ``V / V_0`` of a design; with ``target`` the uniform radius is calibrated
        target: volume fraction the initial radius aims at
        r_lo, r_hi: radius bounds; without calibration every radius is ``r_lo``
        bbox_lo, bbox_hi: bounds of the positions stored with the seeds
    """
    if n_seeds < 1:
        raise ValueError(f"need at least one seed, got {n_seeds}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown seeding strategy `{strategy}`, use one of {STRATEGIES}")
    rng = np.random.default_rng(seed)

    positions = None
    if strategy == "blue_noise":
        positions = sample_blue_noise(domain, n_seeds, rng)
        if positions is None:
            logging.warning(f"Could not fit {n_seeds} blue-noise seeds, falling back to uniform sampling")
    if positions is None:
        positions = sample_uniform(domain, n_seeds, rng)

    lo, hi = domain.bbox()
    bbox_lo = lo if bbox_lo is None else bbox_lo
    bbox_hi = hi if bbox_hi is None else bbox_hi
    if r_lo is None:
        r_lo = 0.05 * domain.diagonal / max(1.0, n_seeds ** (1.0 / len(lo)))
    r_hi = r_lo if r_hi is None else r_hi

    def design(r: float) -> SeedSet:
        return SeedSet(positions, np.full(n_seeds, r), bbox_lo, bbox_hi)

    if volume_fraction is None or target is None:
        return design(r_lo)
    r = calibrate_radius(lambda r: volume_fraction(design(r)), target, r_lo, r_hi, rtol=rtol)
    logging.info(f"Initial design: {n_seeds} seeds ({strategy}), uniform radius {r:.4g}")
    return design(r)
