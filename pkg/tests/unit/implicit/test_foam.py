import math

import numpy as np
import pytest

from foamopt.domain import Box
from foamopt.implicit import (
    DensityField,
    ImplicitFoam,
    LocalFoamEvaluator,
    domain_volume,
    element_mean,
    extract_surface,
    foam_from_seeds,
    foam_phi,
    node_density,
    sample_density,
    sample_grid,
    shell_and_faces,
    volume,
    write_obj,
)
from foamopt.voronoi import SeedSet, margin_box


def single_beam(**kwargs):
    kwargs.setdefault("eps", 0.05)
    return ImplicitFoam([[0.2, 0.5]], [[0.8, 0.5]], [0.1], **kwargs)


class TestImplicitFoam:
    def test_single_beam(self):
        foam = single_beam()
        points = np.array([[0.5, 0.5], [0.5, 0.55], [0.9, 0.5], [0.5, 0.7]])
        assert np.allclose(foam.phi(points), [0.1, 0.05, 0.0, -0.1])

    def test_floor(self):
        foam = single_beam(p=16.0, ks_tol=1e-6)
        assert foam.floor == pytest.approx(-(0.05 + math.log(1e6) / 16.0))
        assert foam.phi([[100.0, 100.0]])[0] == pytest.approx(foam.floor)

    def test_ks_length(self):
        foam = single_beam(ks_length=0.01)
        assert foam.ks_margin == pytest.approx(0.01 * math.log(1e6) / 16.0)
        assert foam.phi([[0.5, 0.55]])[0] == pytest.approx(0.05)

    def test_union_of_crossing_beams(self):
        foam = ImplicitFoam(
            [[0.0, 0.5], [0.5, 0.0]], [[1.0, 0.5], [0.5, 1.0]], [0.1, 0.1], eps=0.05, p=16.0, ks_length=0.01
        )
        value = foam.phi([[0.5, 0.5]])[0]
        assert 0.1 <= value <= 0.1 + 0.01 * math.log(2.0) / 16.0 + 1e-12
        # far from the crossing one beam dominates
        assert foam.phi([[0.9, 0.5]])[0] == pytest.approx(0.1, abs=1e-12)

    def test_no_beams(self):
        foam = ImplicitFoam(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0), eps=0.05)
        assert np.allclose(foam.phi(np.zeros((3, 2))), foam.floor)

    def test_shell(self):
        domain = Box([0.0, 0.0], [1.0, 1.0])
        foam = single_beam(domain=domain, shell=True, shell_thickness=0.05, ks_length=0.001)
        # close to the boundary the shell band dominates
        assert foam.phi([[0.01, 0.9]])[0] == pytest.approx(0.04, abs=1e-6)
        assert shell_and_faces([0.01, 0.9], foam) == pytest.approx([0.04])

    def test_boundary_faces(self):
        domain = Box([0.0, 0.0], [1.0, 1.0])
        foam = ImplicitFoam(
            np.zeros((0, 2)),
            np.zeros((0, 2)),
            np.zeros(0),
            eps=0.05,
            domain=domain,
            boundary_faces=True,
            seed_positions=[[0.25, 0.5], [0.75, 0.5]],
            seed_radii=[0.02, 0.04],
            ks_length=0.001,
        )
        # on the domain boundary where the two cells meet
        assert foam.phi([[0.5, 0.0]])[0] == pytest.approx(0.03, abs=1e-6)
        assert foam.phi([[0.2, 0.0]])[0] < 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(p=0.0),
            dict(eps=0.0),
            dict(alpha=1.0),
            dict(shell=True),
            dict(shell=True, domain=Box([0, 0], [1, 1])),
            dict(boundary_faces=True, domain=Box([0, 0], [1, 1])),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            single_beam(**kwargs)


class TestFromSeeds:
    def test_foam_from_seeds(self, seeds2d, unit_square):
        box = margin_box(*unit_square.bbox())
        full, clipped, foam = foam_from_seeds(seeds2d, unit_square, box, l_a=0.01, eps=0.02)
        assert foam.n_beams == clipped.n_edges
        assert full.n_edges >= clipped.n_edges
        assert foam.ks_length == 0.01
        # every beam center is solid
        v1, v2 = clipped.segments()
        mid = 0.5 * (v1 + v2)
        assert np.all(foam.phi(mid) >= clipped.rbar - 1e-12)

    def test_local_evaluator_matches(self, unit_square):
        rng = np.random.default_rng(2)
        seeds = SeedSet(0.05 + 0.9 * rng.random((30, 2)), 0.03)
        box = margin_box(*unit_square.bbox())
        _, _, foam = foam_from_seeds(seeds, unit_square, box, l_a=0.01, eps=0.01)
        evaluator = LocalFoamEvaluator(foam, unit_square, box, 0.01, three_point=False)
        points = 0.1 + 0.8 * rng.random((20, 2))
        phi, degenerate = evaluator.phi(points, seeds)
        assert not degenerate.any()
        assert np.allclose(phi, foam.phi(points))
        assert foam_phi(points[0], foam, seeds, evaluator) == pytest.approx(phi[0])
        assert foam_phi(points[0], foam) == pytest.approx(phi[0])

    def test_three_point_branch(self, unit_square):
        rng = np.random.default_rng(3)
        seeds = SeedSet(0.05 + 0.9 * rng.random((30, 2)), 0.03)
        box = margin_box(*unit_square.bbox())
        _, _, foam = foam_from_seeds(seeds, unit_square, box, l_a=0.01, eps=0.01)
        evaluator = LocalFoamEvaluator(foam, unit_square, box, 0.01, three_point=True)
        # on the bisector of the two nearest seeds, away from any vertex
        a, b = seeds.positions[0], seeds.positions[1]
        mask = evaluator.three_point_mask(seeds.radii, np.array([[0, 1]]))
        assert mask.tolist() == [True]
        phi, _ = evaluator.phi(np.atleast_2d(0.5 * (a + b)), seeds)
        assert np.isfinite(phi[0])

    def test_three_point_error_bound(self, unit_square):
        # uniform radii: |r_2 - r_1| vanishes and only the KS blending remains
        rng = np.random.default_rng(5)
        seeds = SeedSet(0.05 + 0.9 * rng.random((40, 2)), 0.02)
        box = margin_box(*unit_square.bbox())
        _, clipped, foam = foam_from_seeds(
            seeds, unit_square, box, l_a=0.01, eps=0.01, boundary_faces=True
        )
        evaluator = LocalFoamEvaluator(foam, unit_square, box, 0.01, three_point=True)
        v1, v2 = clipped.segments()
        long = np.linalg.norm(v2 - v1, axis=1) > 0.04
        points = np.concatenate([v1[long] + t * (v2[long] - v1[long]) for t in (0.25, 0.5, 0.75)])
        near_boundary = np.abs(unit_square.phi(points)) < 0.1
        assert near_boundary.sum() >= 5
        phi, degenerate = evaluator.phi(points, seeds)
        assert not degenerate.any()
        reference = foam.phi(points)
        bound = foam.ks_length * math.log(foam.n_beams + 2) / foam.p
        assert np.all(reference - phi >= -1e-12)
        assert np.all(reference - phi <= bound + 1e-12)

    def test_three_point_seed_order(self, unit_square):
        rng = np.random.default_rng(6)
        seeds = SeedSet(0.05 + 0.9 * rng.random((12, 2)), 0.02 + 0.01 * rng.random(12))
        box = margin_box(*unit_square.bbox())
        _, _, foam = foam_from_seeds(
            seeds, unit_square, box, l_a=0.01, eps=0.01, boundary_faces=True
        )
        evaluator = LocalFoamEvaluator(foam, unit_square, box, 0.01, three_point=True)
        points = np.stack([np.linspace(0.02, 0.98, 25), np.full(25, 0.01)], axis=1)
        perm = rng.permutation(12)
        shuffled = SeedSet(seeds.positions[perm], seeds.radii[perm])
        phi, _ = evaluator.phi(points, seeds)
        phi_shuffled, _ = evaluator.phi(points, shuffled)
        assert np.allclose(phi, phi_shuffled, rtol=0.0, atol=1e-12)


class TestDensity:
    def test_node_density(self):
        values, mask = node_density(np.array([1.0, -1.0, 1.0]), np.array([1.0, 1.0, -1.0]), 0.1, 1e-3)
        assert np.allclose(values, [1.0, 1e-3, 1e-3])
        assert np.allclose(mask, [1.0, 1.0, 0.0])

    def test_element_mean(self):
        assert np.allclose(element_mean(np.array([0.0, 1.0, 2.0, 3.0]), np.array([[0, 1, 2], [1, 2, 3]])), [1.0, 2.0])

    def test_sample_density(self, square_mesh):
        foam = ImplicitFoam([[0.0, 0.5]], [[1.0, 0.5]], [0.2], eps=0.02, alpha=1e-4)
        density = sample_density(square_mesh.fine, foam)
        assert isinstance(density, DensityField)
        assert len(density) == square_mesh.fine.n_elements
        assert np.all(density.values >= 1e-4 - 1e-15)
        assert np.all(density.values <= 1.0)
        v, frac = volume(density, square_mesh.fine)
        # a band of width 0.4 (smeared over one fine cell at each edge)
        assert frac == pytest.approx(0.4, abs=0.05)
        assert v == pytest.approx(frac * domain_volume(square_mesh.fine, foam.eps))

    def test_domain_volume(self, square_mesh):
        # boundary nodes sit on phi = 0 and count half
        assert domain_volume(square_mesh.fine, 0.001) == pytest.approx(1.0 - 31.0 / 512.0)


class TestSurface:
    def test_sample_grid(self, unit_square):
        foam = single_beam()
        values, origin = sample_grid(foam, unit_square, 0.25, pad=1)
        assert np.allclose(origin, [-0.25, -0.25])
        assert values.shape == (7, 7)
        assert values[3, 3] == pytest.approx(0.1)

    def test_extract_2d(self, tmp_path, unit_square):
        foam = single_beam()
        vertices, segments = extract_surface(foam, unit_square, 0.01)
        assert len(vertices) > 0
        assert segments.shape[1] == 2
        # contour points sit on the capsule boundary
        assert np.allclose(foam.phi(vertices), 0.0, atol=0.01)
        name = write_obj(str(tmp_path / "foam.obj"), vertices, segments)
        lines = open(name).read().splitlines()
        assert lines[1].startswith("v ")
        assert lines[-1].startswith("l ")

    def test_extract_3d(self, tmp_path, unit_cube):
        foam = ImplicitFoam([[0.2, 0.5, 0.5]], [[0.8, 0.5, 0.5]], [0.15], eps=0.05)
        vertices, triangles = extract_surface(foam, unit_cube, 0.05)
        assert vertices.shape[1] == 3
        assert triangles.shape[1] == 3
        assert len(triangles) > 0
        name = write_obj(str(tmp_path / "foam.obj"), vertices, triangles)
        assert open(name).read().splitlines()[-1].startswith("f ")

    def test_nothing_to_extract(self, unit_square):
        foam = ImplicitFoam([[5.0, 5.0]], [[6.0, 5.0]], [0.1], eps=0.05)
        vertices, segments = extract_surface(foam, unit_square, 0.1)
        assert vertices.shape == (0, 2)
        assert segments.shape == (0, 2)
