import csv

import numpy as np
import pytest

from foamopt.sensitivity import (
    GradientVector,
    NOISE_FLOOR,
    check_gradients,
    cosine_similarity,
    relative_error,
    sample_variables,
    step_study,
    write_gradient_check,
)
from foamopt.voronoi import SeedSet


@pytest.fixture()
def seeds():
    return SeedSet([[0.2, 0.3], [0.7, 0.6], [0.4, 0.8]], [0.5, 0.4, 0.6])


def quadratic(seeds):
    """C = sum r^2, V = sum of the coordinates."""
    return float(np.sum(seeds.radii**2)), float(np.sum(seeds.positions))


def exact_gradient(seeds):
    n, dim = seeds.positions.shape
    return GradientVector(np.zeros((n, dim)), 2.0 * seeds.radii, np.ones((n, dim)), np.zeros(n), np.zeros((n, dim)))


def test_cosine_similarity():
    assert cosine_similarity(np.zeros(3), np.zeros(3)) == 1.0
    assert cosine_similarity(np.zeros(3), np.ones(3)) == 0.0
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == pytest.approx(-1.0)


def test_relative_error():
    err = relative_error(np.array([1.0, 0.1 * NOISE_FLOOR, 2.0]), np.array([1.1, 0.0, 0.0]))
    assert np.allclose(err, [0.1 / 1.1, 0.0, 1.0])


class TestSampleVariables:
    def test_all(self):
        assert sample_variables(3, 2).tolist() == list(range(9))
        assert sample_variables(3, 2, radii=False).tolist() == list(range(6))
        assert sample_variables(3, 2, positions=False).tolist() == [6, 7, 8]

    def test_reproducible(self):
        a = sample_variables(10, 3, n=8, seed=4)
        assert np.array_equal(a, sample_variables(10, 3, n=8, seed=4))
        assert len(np.unique(a)) == 8
        assert np.all(np.diff(a) > 0)
        assert np.all((a >= 0) & (a < 40))

    def test_larger_than_pool(self):
        assert len(sample_variables(2, 2, n=100)) == 6


def test_check_gradients(seeds):
    variables = sample_variables(seeds.n_seeds, seeds.dim)
    report = check_gradients(quadratic, seeds, exact_gradient(seeds), variables, step=0.01)
    summary = report.summary()
    assert summary["cos_C"] == pytest.approx(1.0)
    assert summary["cos_V"] == pytest.approx(1.0)
    assert summary["rel_C"] < 1e-8
    assert summary["rel_V"] < 1e-8
    assert len(report.rows(3)) == 3 * len(variables)


def test_check_detects_wrong_gradient(seeds):
    wrong = exact_gradient(seeds)
    wrong.dC_dr = -wrong.dC_dr
    report = check_gradients(quadratic, seeds, wrong, sample_variables(3, 2), step=0.01)
    assert report.cosine("C") == pytest.approx(-1.0)
    assert report.max_relative_error("C") > 1.0


def test_step_study(seeds):
    variables = sample_variables(3, 2, positions=False)
    reports = step_study(quadratic, lambda step: exact_gradient(seeds), seeds, variables, [0.5, 1.0], l_a=0.02)
    assert [r.step for r in reports] == pytest.approx([0.01, 0.02])
    assert all(r.cosine("C") == pytest.approx(1.0) for r in reports)
    with pytest.raises(ValueError):
        step_study(quadratic, lambda step: exact_gradient(seeds), seeds, variables, [-1.0], l_a=0.02)


def test_write_gradient_check(seeds, tmp_path):
    variables = [0, 7]
    report = check_gradients(quadratic, seeds, exact_gradient(seeds), variables, step=0.01)
    path = write_gradient_check(str(tmp_path / "gradient_check.csv"), [(0, report), (10, report)])
    with open(path) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["iteration", "variable", "quantity", "assembled", "finite_difference"]
    assert len(rows) == 1 + 2 * 3 * len(variables)
    assert {r[0] for r in rows[1:]} == {"0", "10"}
    radius_rows = [r for r in rows[1:] if r[1] == "7" and r[2] == "C"]
    assert float(radius_rows[0][3]) == pytest.approx(0.8)


def half_following_shape(seeds):
    """S = sum |X - c|^2 with centroids c = X / 2 that move with the seeds."""
    return float(np.sum((0.5 * seeds.positions) ** 2))


def test_shape_reference_moves_centroids(seeds):
    variables = sample_variables(seeds.n_seeds, seeds.dim)
    frozen = exact_gradient(seeds)
    # frozen-centroid gradient 2 (X - c) = X; the true one is X / 2
    frozen.dS_dX = seeds.positions.copy()
    report = check_gradients(quadratic, seeds, frozen, variables, step=0.01, shape=half_following_shape)
    n_pos = seeds.n_seeds * seeds.dim
    assert np.allclose(report.reference["S"][:n_pos], 0.5 * seeds.positions.ravel())
    assert np.all(report.reference["S"][n_pos:] == 0.0)
    assert report.max_relative_error("S") == pytest.approx(0.5)

    moving = exact_gradient(seeds)
    moving.dS_dX = 0.5 * seeds.positions
    report = check_gradients(quadratic, seeds, moving, variables, step=0.01, shape=half_following_shape, shape_step=0.05)
    assert report.max_relative_error("S") < 1e-8


def test_unchecked_shape(seeds):
    gradient = exact_gradient(seeds)
    gradient.dS_dX = np.full_like(seeds.positions, 3.0)
    report = check_gradients(quadratic, seeds, gradient, sample_variables(3, 2), step=0.01)
    assert report.cosine("S") == pytest.approx(1.0)
    assert report.max_relative_error("S") == 0.0


def test_step_study_reference_step(seeds):
    variables = sample_variables(3, 2, positions=False)
    calls = []

    def counting(s):
        calls.append(s.radii.copy())
        return quadratic(s)

    step_study(counting, lambda step: exact_gradient(seeds), seeds, variables, [1.0], l_a=0.02, reference_step=0.001)
    deltas = sorted({round(float(np.max(np.abs(r - seeds.radii))), 12) for r in calls})
    assert deltas == [0.001]
