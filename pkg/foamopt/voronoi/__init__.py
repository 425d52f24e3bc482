from ._seeds import SeedSet, beam_radius
from ._graph import VoronoiGraph
from ._tessellate import tessellate, margin_box, find_duplicate_seeds, circumcenters
from ._clip import clip
from ._local import (
    DEFAULT_K,
    LocalVoronoi,
    ThreePointBeam,
    local_reconstruct,
    three_point_beam,
    three_point_loci,
    two_ring_seeds,
)
from ._centroids import CentroidQuadrature, cell_centroids

__all__ = [
    SeedSet,
    beam_radius,
    VoronoiGraph,
    tessellate,
    margin_box,
    find_duplicate_seeds,
    circumcenters,
    clip,
    DEFAULT_K,
    LocalVoronoi,
    ThreePointBeam,
    local_reconstruct,
    three_point_beam,
    three_point_loci,
    two_ring_seeds,
    CentroidQuadrature,
    cell_centroids,
]
