import numpy as np
import pytest

from foamopt.errors import ConfigError, UnconstrainedModeError
from foamopt.fem import (
    LoadCase,
    LoadSpec,
    Selector,
    StiffnessAssembler,
    boundary_facets,
    benchmark_compliance,
    compliance,
    compliance_error,
    facet_measures,
    loadcase_from_config,
    solve,
    unconstrained_modes,
)
from foamopt.implicit import foam_from_seeds, sample_density
from foamopt.voronoi import margin_box


@pytest.fixture(scope="module")
def stiffness(square_mesh, material):
    return StiffnessAssembler(square_mesh.fine, material).assemble(1.0)


class TestSelector:
    def test_face(self, square_mesh):
        mesh = square_mesh.fine
        mask = Selector({"face": "x+"})(mesh.nodes, mesh.bbox())
        assert mask.sum() == 17
        assert np.allclose(mesh.nodes[mask, 0], 1.0)

    def test_box(self, square_mesh):
        mesh = square_mesh.fine
        mask = Selector({"box": [[0.0, 0.0], [0.25, 0.25]]})(mesh.nodes, mesh.bbox())
        assert mask.sum() == 25

    def test_point(self, square_mesh):
        mesh = square_mesh.fine
        mask = Selector({"point": [0.49, 0.51]})(mesh.nodes, mesh.bbox())
        assert mask.sum() == 1
        assert np.allclose(mesh.nodes[mask][0], [0.5, 0.5])
        mask = Selector({"point": [0.5, 0.5], "tol": 0.07})(mesh.nodes, mesh.bbox())
        assert mask.sum() == 5

    @pytest.mark.parametrize(
        "spec",
        [{}, {"face": "x+", "point": [0, 0]}, {"face": "w+"}, {"face": "x"}, {"box": [0, 1]}, "x+"],
    )
    def test_invalid(self, spec):
        with pytest.raises(ConfigError):
            Selector(spec)

    def test_selects_nothing(self, square_mesh):
        mesh = square_mesh.fine
        with pytest.raises(ConfigError, match="selects no node"):
            Selector({"point": [5.0, 5.0], "tol": 0.1})(mesh.nodes, mesh.bbox())
        with pytest.raises(ConfigError):
            Selector({"face": "z+"})(mesh.nodes, mesh.bbox())


def test_boundary_facets(square_mesh):
    mesh = square_mesh.fine
    facets = boundary_facets(mesh.elements)
    assert len(facets) == 4 * 16
    assert facet_measures(mesh.nodes, facets).sum() == pytest.approx(4.0)


class TestLoadSpec:
    def test_traction_force(self, square_mesh, tension):
        f = tension.force(square_mesh.fine).reshape(-1, 2)
        assert f[:, 0].sum() == pytest.approx(1.0)
        assert f[:, 1].sum() == pytest.approx(0.0)
        # consistent loads: corner nodes carry half a facet
        on_face = np.isclose(square_mesh.fine.nodes[:, 0], 1.0)
        assert np.allclose(np.sort(f[on_face, 0]), [1 / 32] * 2 + [1 / 16] * 15)

    def test_total_force(self, square_mesh):
        spec = LoadSpec(
            dirichlet=[{"select": {"face": "x-"}}],
            neumann=[{"select": {"point": [1.0, 0.5]}, "force": [0.0, -2.0]}],
        )
        f = spec.force(square_mesh.fine).reshape(-1, 2)
        assert f[:, 1].sum() == pytest.approx(-2.0)
        assert np.count_nonzero(f) == 1

    def test_constraints(self, square_mesh, tension):
        dofs, values = tension.constraints(square_mesh.fine.nodes, square_mesh.fine.bbox())
        # x of the 17 nodes on x-, y of the origin
        assert len(dofs) == 18
        assert np.all(values == 0.0)
        assert np.all(np.diff(dofs) > 0)

    def test_coarse(self, square_mesh, tension):
        case = tension.coarse(square_mesh, np.zeros(square_mesh.n_dofs))
        # x of the 5 coarse nodes on x-, y of the origin
        assert len(case.dirichlet_dofs) == 6
        assert case.n_dofs == square_mesh.n_dofs

    @pytest.mark.parametrize(
        "dirichlet,neumann",
        [
            ([], None),
            ([{"axes": [0]}], None),
            ([{"select": {"face": "x-"}}], [{"select": {"face": "x+"}}]),
            ([{"select": {"face": "x-"}}], [{"select": {"face": "x+"}, "force": [1, 0], "traction": [1, 0]}]),
        ],
    )
    def test_invalid(self, dirichlet, neumann):
        with pytest.raises(ConfigError):
            LoadSpec(dirichlet, neumann)

    def test_from_config(self, tension):
        spec = loadcase_from_config({"loadcase": {"dirichlet": [{"select": {"face": "y-"}}]}})
        assert len(spec.dirichlet) == 1
        assert spec.neumann == []
        assert loadcase_from_config({"loadcase": tension}) is tension
        with pytest.raises(ConfigError):
            loadcase_from_config({})
        with pytest.raises(ConfigError):
            loadcase_from_config({"loadcase": {"dirichlet": [], "pressure": 1}})


class TestSolve:
    def test_uniaxial_tension(self, square_mesh, material, tension, stiffness):
        mesh = square_mesh.fine
        case = tension.fine(mesh)
        Q = solve(stiffness, case, points=mesh.nodes).reshape(-1, 2)
        assert np.allclose(Q[:, 0], mesh.nodes[:, 0], atol=1e-9)
        assert np.allclose(Q[:, 1], -material.poisson * mesh.nodes[:, 1], atol=1e-9)
        C = compliance(stiffness, Q.reshape(-1), case.force)
        assert C == pytest.approx(0.5)
        assert compliance(stiffness, Q.reshape(-1)) == pytest.approx(0.5)

    @pytest.mark.parametrize("method", ["direct", "cg"])
    def test_methods_agree(self, square_mesh, cantilever, stiffness, method):
        case = cantilever.fine(square_mesh.fine)
        Q = solve(stiffness, case, method=method)
        reference = solve(stiffness, case, method="direct")
        assert np.linalg.norm(Q - reference) <= 1e-5 * np.linalg.norm(reference)
        assert compliance(stiffness, Q, case.force) > 0

    def test_prescribed_displacement(self, square_mesh, stiffness):
        spec = LoadSpec(
            dirichlet=[
                {"select": {"face": "x-"}, "axes": [0]},
                {"select": {"face": "x+"}, "axes": [0], "value": 0.01},
                {"select": {"point": [0.0, 0.0]}, "axes": [1]},
            ]
        )
        case = spec.fine(square_mesh.fine)
        assert not case.homogeneous
        Q = solve(stiffness, case, points=square_mesh.fine.nodes).reshape(-1, 2)
        assert np.allclose(Q[:, 0], 0.01 * square_mesh.fine.nodes[:, 0], atol=1e-9)

    def test_unconstrained(self, square_mesh, stiffness):
        spec = LoadSpec(
            dirichlet=[{"select": {"face": "x-"}, "axes": [0]}],
            neumann=[{"select": {"face": "x+"}, "traction": [1.0, 0.0]}],
        )
        with pytest.raises(UnconstrainedModeError) as excinfo:
            solve(stiffness, spec.fine(square_mesh.fine), points=square_mesh.fine.nodes)
        assert "translation y" in str(excinfo.value)
        assert excinfo.value.modes == ["translation y"]

    def test_unconstrained_modes(self):
        points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert unconstrained_modes(points, np.array([], dtype=np.int64)) == [
            "translation x",
            "translation y",
            "rotation about z",
        ]
        assert unconstrained_modes(points, np.array([0, 1, 3])) == []

    def test_zero_load(self, square_mesh, tension, stiffness):
        case = tension.fine(square_mesh.fine).scaled(0.0)
        assert np.all(solve(stiffness, case) == 0.0)

    def test_size_mismatch(self, stiffness):
        with pytest.raises(ValueError):
            solve(stiffness, LoadCase([0], [0.0], np.zeros(4)))

    def test_unknown_method(self, square_mesh, tension, stiffness):
        with pytest.raises(ValueError):
            solve(stiffness, tension.fine(square_mesh.fine), method="lu")


def test_compliance_error():
    assert compliance_error(1.1, 1.0) == pytest.approx(0.01)
    assert compliance_error(2.0, 2.0) == 0.0


def test_benchmark_compliance(square_mesh, unit_square, cantilever, material, seeds2d):
    fine = square_mesh.fine
    _, _, foam = foam_from_seeds(seeds2d, unit_square, margin_box(*unit_square.bbox()), fine.l_a, eps=1.5 * fine.l_a)
    result = benchmark_compliance(foam, seeds2d, square_mesh, cantilever, material)
    assert result.error is None
    assert result.seconds >= 0.0

    density = sample_density(fine, foam)
    assert np.allclose(result.density.values, density.values)
    K = StiffnessAssembler(fine, material).assemble(density)
    case = cantilever.fine(fine)
    assert result.compliance == pytest.approx(compliance(K, solve(K, case), case.force), rel=1e-8)
    # a foam is softer than the solid plate
    solid = StiffnessAssembler(fine, material).assemble(1.0)
    assert result.compliance > compliance(solid, solve(solid, case), case.force)

    again = benchmark_compliance(foam, seeds2d, fine, cantilever, material, reference=2.0 * result.compliance)
    assert again.error == pytest.approx(0.25)
