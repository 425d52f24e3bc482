import numpy as np
import pytest

from foamopt.errors import InvertedElementError
from foamopt.mesh import FineMesh, simplex_volumes, unique_edges

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_simplex_volumes():
    assert np.allclose(simplex_volumes(SQUARE, np.array([[0, 1, 2], [0, 2, 3], [0, 2, 1]])), [0.5, 0.5, -0.5])
    tet = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert simplex_volumes(tet, np.array([[0, 1, 2, 3]]))[0] == pytest.approx(1.0 / 6.0)


def test_unique_edges():
    edges = unique_edges(np.array([[0, 1, 2], [0, 2, 3]]))
    assert edges.tolist() == [[0, 1], [0, 2], [0, 3], [1, 2], [2, 3]]


def test_fine_mesh():
    mesh = FineMesh(SQUARE, [[0, 1, 2], [0, 2, 3]], np.ones(4))
    assert mesh.dim == 2
    assert mesh.n_nodes == 4
    assert mesh.n_elements == 2
    assert mesh.n_dofs == 8
    assert mesh.l_a == pytest.approx((4.0 + np.sqrt(2.0)) / 5.0)
    assert mesh.diagonal == pytest.approx(np.sqrt(2.0))
    assert np.array_equal(mesh.element_owner, [0, 0])
    assert np.allclose(mesh.element_centroids()[0], [2.0 / 3.0, 1.0 / 3.0])


def test_inverted():
    with pytest.raises(InvertedElementError) as excinfo:
        FineMesh(SQUARE, [[0, 1, 2], [0, 3, 2]], np.ones(4))
    assert excinfo.value.elements == [1]


@pytest.mark.parametrize(
    "nodes,elements",
    [(np.zeros((4, 1)), [[0, 1]]), (SQUARE, [[0, 1, 2, 3]])],
)
def test_bad_shapes(nodes, elements):
    with pytest.raises(ValueError):
        FineMesh(nodes, elements, np.ones(len(nodes)))
