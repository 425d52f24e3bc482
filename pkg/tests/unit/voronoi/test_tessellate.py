import numpy as np
import pytest

from foamopt.domain import Box, Sphere
from foamopt.errors import DuplicateSeedError
from foamopt.voronoi import (
    SeedSet,
    VoronoiGraph,
    circumcenters,
    clip,
    find_duplicate_seeds,
    margin_box,
    tessellate,
)

UNIT = (np.zeros(2), np.ones(2))


def random_seeds(n, dim, seed=0, radius=0.05):
    rng = np.random.default_rng(seed)
    return SeedSet(0.05 + 0.9 * rng.random((n, dim)), np.full(n, radius))


def test_two_seeds():
    seeds = SeedSet([[0.3, 0.4], [0.7, 0.6]], [0.1, 0.3])
    graph = tessellate(seeds, UNIT)
    assert graph.n_edges == 1
    v1, v2 = graph.segments()
    ends = sorted([tuple(np.round(v1[0], 9)), tuple(np.round(v2[0], 9))])
    assert np.allclose(ends, [(0.25, 1.0), (0.75, 0.0)])
    assert set(graph.edge_seeds[0].tolist()) == {0, 1}
    assert graph.rbar[0] == pytest.approx(0.2)
    assert graph.neighbor_pairs.tolist() == [[0, 1]]


def test_single_seed():
    graph = tessellate(SeedSet([[0.5, 0.5]], 0.1), UNIT)
    assert graph.n_edges == 0


@pytest.mark.parametrize("dim", [2, 3])
def test_voronoi_property(dim):
    seeds = random_seeds(20, dim, seed=dim)
    graph = tessellate(seeds, (np.zeros(dim), np.ones(dim)))
    assert graph.n_edges > 0
    assert np.all(graph.adjacency_counts >= dim)
    for e in range(graph.n_edges):
        adjacent = graph.edge_seeds[e][graph.edge_seeds[e] >= 0]
        for v in graph.vertices[graph.edges[e]]:
            d = np.linalg.norm(seeds.positions - v, axis=1)
            # end points are equidistant to the adjacent seeds, and no seed is closer
            assert np.ptp(d[adjacent]) < 1e-8
            assert d.min() >= d[adjacent].min() - 1e-8


def test_cell_edges():
    seeds = random_seeds(12, 2, seed=3)
    graph = tessellate(seeds, UNIT)
    for seed in range(seeds.n_seeds):
        edges = graph.cell_edges(seed)
        assert len(edges) >= 1
        assert np.all(np.any(graph.edge_seeds[edges] == seed, axis=1))


def test_cocircular_square():
    # four cocircular seeds meet in a single Voronoi vertex
    seeds = SeedSet([[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]], 0.05)
    graph = tessellate(seeds, UNIT)
    assert graph.n_edges == 4
    center = np.argmin(np.linalg.norm(graph.vertices - 0.5, axis=1))
    assert np.allclose(graph.vertices[center], [0.5, 0.5])
    assert np.all(np.any(graph.edges == center, axis=1))


def test_duplicates():
    seeds = SeedSet([[0.2, 0.2], [0.2, 0.2], [0.7, 0.7]], 0.05)
    with pytest.raises(DuplicateSeedError):
        tessellate(seeds, UNIT)
    assert find_duplicate_seeds(seeds.positions, 1e-9).tolist() == [[0, 1]]


def test_box_must_contain_seeds():
    with pytest.raises(ValueError):
        tessellate(SeedSet([[0.0, 0.5], [0.5, 0.5]], 0.1), UNIT)


def test_margin_box():
    lo, hi = margin_box([0.0, 0.0], [3.0, 4.0], factor=1.0)
    assert np.allclose(lo, [-5.0, -5.0])
    assert np.allclose(hi, [8.0, 9.0])


def test_circumcenters():
    points = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [1.0, 0.0]])
    centers, flat = circumcenters(points, np.array([[0, 1, 2], [0, 3, 1]]))
    assert np.allclose(centers[0], [1.0, 1.0])
    assert flat.tolist() == [False, True]


class TestClip:
    def test_inside_domain(self):
        seeds = random_seeds(25, 2, seed=5)
        graph = tessellate(seeds, margin_box(*UNIT))
        disk = Sphere([0.5, 0.5], 0.4)
        clipped = clip(graph, disk, l_a=0.01)
        assert clipped.n_edges > 0
        assert np.all(disk.phi(clipped.vertices) >= -1e-9)
        assert np.array_equal(clipped.edge_seeds, graph.edge_seeds[clipped.parent_edge])
        assert np.array_equal(clipped.rbar, graph.rbar[clipped.parent_edge])

    def test_unclipped_edges_kept(self):
        seeds = SeedSet([[0.3, 0.4], [0.7, 0.6]], 0.1)
        graph = tessellate(seeds, UNIT)
        clipped = clip(graph, Box([-1.0, -1.0], [2.0, 2.0]))
        assert clipped.n_edges == 1
        assert np.allclose(np.sort(clipped.vertices, axis=0), np.sort(graph.vertices, axis=0))

    def test_outside_domain(self):
        seeds = SeedSet([[0.3, 0.4], [0.7, 0.6]], 0.1)
        graph = tessellate(seeds, UNIT)
        clipped = clip(graph, Box([5.0, 5.0], [6.0, 6.0]))
        assert clipped.n_edges == 0

    def test_empty(self):
        empty = VoronoiGraph.empty(2, 1, UNIT)
        assert clip(empty, Box([0, 0], [1, 1])).n_edges == 0


def test_graph_helpers():
    seeds = random_seeds(10, 2, seed=1)
    graph = tessellate(seeds, UNIT)
    radii = np.linspace(0.01, 0.1, 10)
    resized = graph.with_radii(radii)
    e = 0
    adjacent = graph.edge_seeds[e][graph.edge_seeds[e] >= 0]
    assert resized.rbar[e] == pytest.approx(radii[adjacent].mean())

    sub = graph.subset(np.arange(graph.n_edges) < 3)
    assert sub.n_edges == 3
    assert np.allclose(sub.segments()[0], graph.segments()[0][:3])

    d = graph.distances(seeds.positions[0])
    assert d.shape == (graph.n_edges,)
    assert np.all(d > 0)

    inside = graph.cell_contains(0, seeds.positions, seeds.positions)
    assert inside[0]
    assert not inside[1:].any()
