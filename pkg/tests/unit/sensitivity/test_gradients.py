import numpy as np
import pytest

from foamopt.sensitivity import (
    DensityJacobianSlice,
    GradientVector,
    compliance_gradient,
    cospherical,
    decode_variable,
    differentiability_guard,
    shape_energy_and_gradient,
    variable_index,
    vertex_incidence,
    volume_gradient,
)


class TestVariables:
    def test_layout(self):
        # positions come first, flattened seed major, then the radii
        assert decode_variable(0, 3, 2) == (0, 0)
        assert decode_variable(5, 3, 2) == (2, 1)
        assert decode_variable(6, 3, 2) == (0, None)
        assert decode_variable(8, 3, 2) == (2, None)
        assert decode_variable(7, 2, 3) == (1, None)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_inverse(self, dim):
        n = 4
        for a in range(n * (dim + 1)):
            seed, axis = decode_variable(a, n, dim)
            assert variable_index(seed, axis, n, dim) == a

    @pytest.mark.parametrize("a", [-1, 9])
    def test_out_of_range(self, a):
        with pytest.raises(IndexError):
            decode_variable(a, 3, 2)


def test_vertex_incidence(square_mesh):
    mesh = square_mesh.fine
    incidence = vertex_incidence(mesh.elements, mesh.n_nodes)
    assert incidence.shape == (mesh.n_elements, mesh.n_nodes)
    assert np.allclose(np.asarray(incidence.sum(axis=1)).ravel(), 1.0)
    values = np.random.default_rng(0).random(mesh.n_nodes)
    assert np.allclose(incidence @ values, values[mesh.elements].mean(axis=1))


class TestSlice:
    def test_element_values(self, square_mesh):
        mesh = square_mesh.fine
        incidence = vertex_incidence(mesh.elements, mesh.n_nodes)
        vertex = 40
        s = DensityJacobianSlice(3, [vertex], [3.0])
        elements, dHe = s.element_values(incidence)
        expected = np.nonzero(np.any(mesh.elements == vertex, axis=1))[0]
        assert np.array_equal(np.sort(elements), expected)
        assert np.allclose(dHe, 1.0)

    def test_empty(self, square_mesh):
        mesh = square_mesh.fine
        s = DensityJacobianSlice.empty(7)
        assert len(s) == 0
        elements, dHe = s.element_values(vertex_incidence(mesh.elements, mesh.n_nodes))
        assert len(elements) == 0 and len(dHe) == 0


class TestAdjoint:
    @pytest.fixture(scope="class")
    def uniform(self, square_mesh):
        mesh = square_mesh.fine
        incidence = vertex_incidence(mesh.elements, mesh.n_nodes)
        s = DensityJacobianSlice(0, np.arange(mesh.n_nodes), np.full(mesh.n_nodes, 0.5))
        return s, incidence

    def test_compliance_sign(self, uniform, square_mesh):
        s, incidence = uniform
        energies = np.random.default_rng(1).random(square_mesh.fine.n_elements)
        dC = compliance_gradient([s], energies, incidence)
        # a uniform density increase stiffens the structure
        assert dC[0] == pytest.approx(-0.25 * energies.sum())
        assert dC[0] < 0

    def test_volume(self, uniform, square_mesh):
        s, incidence = uniform
        measure = square_mesh.fine.volumes
        dV = volume_gradient([s], measure, incidence)
        assert dV[0] == pytest.approx(0.5 * measure.sum())


def test_shape_energy():
    positions = np.array([[0.0, 0.0], [1.0, 1.0]])
    centroids = np.array([[0.1, 0.0], [np.nan, np.nan]])
    S, dS = shape_energy_and_gradient(positions, centroids)
    assert S == pytest.approx(0.01)
    assert np.allclose(dS, [[-0.2, 0.0], [0.0, 0.0]])
    S, dS = shape_energy_and_gradient(positions, centroids, weights=np.array([2.0, 1.0]))
    assert S == pytest.approx(0.02)
    assert np.allclose(dS[0], [-0.4, 0.0])


class TestGradientVector:
    @pytest.fixture(scope="class")
    def gradient(self):
        slices = [DensityJacobianSlice(a, [], []) for a in (0, 3, 4, 5)]
        dC = np.array([1.0, 2.0, 3.0, 4.0])
        dV = -dC
        dS = np.array([[0.1, 0.2], [0.3, 0.4]])
        return GradientVector.from_slices(slices, dC, dV, dS)

    def test_layout(self, gradient):
        assert gradient.n_seeds == 2 and gradient.dim == 2
        assert np.allclose(gradient.dC_dX, [[1.0, 0.0], [0.0, 2.0]])
        assert np.allclose(gradient.dC_dr, [3.0, 4.0])
        assert np.allclose(gradient.dV_dr, [-3.0, -4.0])

    def test_pack(self, gradient):
        assert np.allclose(gradient.pack("C"), [1.0, 0.0, 0.0, 2.0, 3.0, 4.0])
        assert np.allclose(gradient.pack("C", radii=False), [1.0, 0.0, 0.0, 2.0])
        assert np.allclose(gradient.pack("V", positions=False), [-3.0, -4.0])
        assert np.allclose(gradient.pack("S"), [0.1, 0.2, 0.3, 0.4, 0.0, 0.0])
        assert gradient.pack("S", positions=False, radii=False).shape == (0,)
        with pytest.raises(ValueError):
            gradient.pack("W")


class TestGuard:
    def test_cospherical(self):
        square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        nearest = np.array([[0, 1, 2, 3]])
        assert cospherical(square, nearest, 1e-6).tolist() == [True]
        off = square.copy()
        off[3, 1] = 1.2
        assert cospherical(off, nearest, 1e-6).tolist() == [False]
        line = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        assert cospherical(line, nearest, 1e-6).tolist() == [False]

    def test_bisector(self):
        seeds = np.array([[0.0, 0.0], [1.0, 0.0]])
        flags = differentiability_guard([[0.5, 0.3], [0.2, 0.3]], seeds, l_a=0.1)
        assert flags.tolist() == [True, False]

    def test_voronoi_vertex(self):
        square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        assert differentiability_guard([0.5, 0.5], square, l_a=0.1).tolist() == [True]

    def test_too_few_seeds(self):
        flags = differentiability_guard(np.zeros((3, 3)), np.array([[0.0, 0.0, 0.0]]), l_a=0.1)
        assert not flags.any()
