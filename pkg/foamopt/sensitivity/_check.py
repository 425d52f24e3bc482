"""Verification of assembled gradients against global finite differences.

The reference re-runs the whole pipeline (tessellation, density, solve) for
every perturbed design, so only a sample of the variables is checked. The shape
energy reference recomputes the cell centroids of every perturbed design.
"""
import csv
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm.auto import tqdm

from foamopt.utils import atomic_write
from foamopt.voronoi import SeedSet
from ._density import decode_variable
from ._gradients import GradientVector

NOISE_FLOOR = 1e-8
QUANTITIES = ("C", "V", "S")

# evaluate(seeds) -> (C, V)
Evaluate = Callable[[SeedSet], Tuple[float, float]]
# shape(seeds) -> S with the centroids of ``seeds``
Shape = Callable[[SeedSet], float]


def sample_variables(n_seeds: int, dim: int, n: Optional[int] = None, seed: int = 0, positions: bool = True, radii: bool = True) -> np.ndarray:
    """Sorted sample of ``n`` variable ids, reproducible for a given ``seed``; all when ``n`` is ``None``."""
    pool = []
    if positions:
        pool.append(np.arange(n_seeds * dim))
    if radii:
        pool.append(n_seeds * dim + np.arange(n_seeds))
    pool = np.concatenate(pool) if pool else np.zeros(0, dtype=np.int64)
    if n is None or n >= len(pool):
        return pool
    return np.sort(np.random.default_rng(seed).choice(pool, size=n, replace=False))


def perturbed(seeds: SeedSet, variable: int, delta: float) -> SeedSet:
    n_seeds, dim = seeds.positions.shape
    seed, axis = decode_variable(variable, n_seeds, dim)
    if axis is None:
        radii = seeds.radii.copy()
        radii[seed] += delta
        return seeds.replace(radii=radii)
    positions = seeds.positions.copy()
    positions[seed, axis] += delta
    return seeds.replace(positions=positions)


def finite_difference_gradient(
    evaluate: Evaluate,
    seeds: SeedSet,
    variables: Sequence[int],
    step: float,
    shape: Optional[Shape] = None,
    shape_step: Optional[float] = None,
) -> Dict[str, np.ndarray]:
    """Global central differences of ``C``, ``V`` and ``S``.

    Radius variables step back by at most half the radius. ``S`` is left at
    zero without ``shape``; it is differenced over ``shape_step`` (default
    ``step``) with the centroids of each perturbed design.
    """
    n_seeds, dim = seeds.positions.shape
    shape_step = step if shape_step is None else float(shape_step)
    out = {q: np.zeros(len(variables)) for q in QUANTITIES}
    for n, a in enumerate(tqdm(variables, desc="finite differences", disable=None, leave=False)):
        seed, axis = decode_variable(a, n_seeds, dim)
        back = step if axis is not None else min(step, 0.5 * float(seeds.radii[seed]))
        plus, minus = perturbed(seeds, a, step), perturbed(seeds, a, -back)
        (c1, v1), (c0, v0) = evaluate(plus), evaluate(minus)
        out["C"][n] = (c1 - c0) / (step + back)
        out["V"][n] = (v1 - v0) / (step + back)
        if shape is not None and axis is not None:
            s1 = shape(perturbed(seeds, a, shape_step))
            s0 = shape(perturbed(seeds, a, -shape_step))
            out["S"][n] = (s1 - s0) / (2.0 * shape_step)
    return out


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 and nb == 0.0:
        return 1.0
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def relative_error(assembled: np.ndarray, reference: np.ndarray, noise_floor: float = NOISE_FLOOR) -> np.ndarray:
    """Per-component relative error; components below ``noise_floor`` in both are reported as 0."""
    scale = np.maximum(np.abs(reference), np.abs(assembled))
    err = np.zeros(len(reference))
    above = scale > noise_floor
    err[above] = np.abs(assembled[above] - reference[above]) / scale[above]
    return err


class GradientCheckReport:
    """Comparison of one assembled gradient with its finite-difference reference."""

    def __init__(self, variables, assembled: Dict[str, np.ndarray], reference: Dict[str, np.ndarray], step: float, noise_floor: float = NOISE_FLOOR):
        self.variables = np.asarray(variables, dtype=np.int64)
        self.assembled = assembled
        self.reference = reference
        self.step = float(step)
        self.noise_floor = noise_floor

    def cosine(self, quantity: str) -> float:
        return cosine_similarity(self.assembled[quantity], self.reference[quantity])

    def max_relative_error(self, quantity: str) -> float:
        err = relative_error(self.assembled[quantity], self.reference[quantity], self.noise_floor)
        return float(err.max()) if len(err) else 0.0

    def summary(self) -> Dict[str, float]:
        out = {"step": self.step}
        for q in QUANTITIES:
            out[f"cos_{q}"] = self.cosine(q)
            out[f"rel_{q}"] = self.max_relative_error(q)
        return out

    def rows(self, iteration: int = 0) -> List[list]:
        rows = []
        for q in QUANTITIES:
            for a, x, y in zip(self.variables, self.assembled[q], self.reference[q]):
                rows.append([iteration, int(a), q, float(x), float(y)])
        return rows

    def __repr__(self):
        s = self.summary()
        return "GradientCheckReport(" + ", ".join(f"{k}={v:.4g}" for k, v in s.items()) + ")"


def check_gradients(
    evaluate: Evaluate,
    seeds: SeedSet,
    gradient: GradientVector,
    variables: Sequence[int],
    step: float,
    shape: Optional[Shape] = None,
    shape_step: Optional[float] = None,
    noise_floor: float = NOISE_FLOOR,
) -> GradientCheckReport:
    """Compare ``gradient`` with global central differences over ``step``.

    Without ``shape`` the ``S`` entries are not checked and the reference copies
    the assembled values.
    """
    variables = np.asarray(variables, dtype=np.int64)
    full = {q: gradient.pack(q) for q in QUANTITIES}
    assembled = {q: full[q][variables] for q in QUANTITIES}
    reference = finite_difference_gradient(evaluate, seeds, variables, step, shape, shape_step)
    if shape is None:
        reference["S"] = assembled["S"].copy()
    report = GradientCheckReport(variables, assembled, reference, step, noise_floor)
    logging.info(f"gradient check: {report!r}")
    return report


def step_study(
    evaluate: Evaluate,
    gradient_at_step: Callable[[float], GradientVector],
    seeds: SeedSet,
    variables: Sequence[int],
    factors: Sequence[float],
    l_a: float,
    shape: Optional[Shape] = None,
    reference_step: Optional[float] = None,
) -> List[GradientCheckReport]:
    """Check the assembled gradient for every step ``factor * l_a``.

    All steps share one reference, differenced over ``reference_step``
    (default ``l_a``); ``S`` always over ``l_a``.
    """
    reference_step = l_a if reference_step is None else float(reference_step)
    reference = finite_difference_gradient(evaluate, seeds, variables, reference_step, shape, l_a)
    if shape is None:
        reference["S"] = np.zeros(len(variables))
    reports = []
    for factor in factors:
        if factor <= 0:
            raise ValueError(f"step factors must be positive, got {factor}")
        gradient = gradient_at_step(factor * l_a)
        assembled = {q: gradient.pack(q)[np.asarray(variables, dtype=np.int64)] for q in QUANTITIES}
        if shape is None:
            assembled["S"] = np.zeros(len(variables))
        report = GradientCheckReport(variables, assembled, reference, factor * l_a)
        logging.info(f"step {factor:g} x l_a: {report!r}")
        reports.append(report)
    return reports


GRADIENT_CHECK_HEADER = ["iteration", "variable", "quantity", "assembled", "finite_difference"]


def write_gradient_check(path: str, reports: Sequence[Tuple[int, GradientCheckReport]]):
    """Write ``(iteration, report)`` pairs as CSV in one atomic write."""
    with atomic_write(path) as f:
        writer = csv.writer(f)
        writer.writerow(GRADIENT_CHECK_HEADER)
        for iteration, report in reports:
            writer.writerows(report.rows(iteration))
    return path
