import logging
from typing import Optional, Tuple

import numpy as np
from skimage import measure

from foamopt.utils.savenload import atomic_write


def sample_grid(foam, domain, spacing: float, pad: int = 2) -> Tuple[np.ndarray, np.ndarray]:
    """``min(Phi, phi_domain)`` on a regular grid covering the domain.

    Returns:
        ``(values, origin)``; ``values`` is indexed ``[i_x, i_y(, i_z)]``
    """
    lo, hi = domain.bbox()
    origin = lo - pad * spacing
    counts = np.ceil((hi - lo) / spacing).astype(np.int64) + 2 * pad + 1
    axes = [origin[a] + spacing * np.arange(counts[a]) for a in range(len(lo))]
    points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    values = np.minimum(foam.phi(points), domain.phi(points))
    return values.reshape(tuple(counts)), origin


def extract_surface(foam, domain, spacing: float, r_lo: Optional[float] = None):
    """Zero level set of the foam clipped to the domain.

    3D gives ``(vertices, triangles)`` from marching cubes; 2D gives
    ``(vertices, segments)`` from marching squares. Both are empty when the
    field never changes sign.
    """
    if r_lo is not None and spacing > 0.5 * r_lo:
        logging.warning(
            f"Export spacing {spacing:.4g} resolves beams of radius {r_lo:.4g} with fewer than 2 cells"
        )
    values, origin = sample_grid(foam, domain, spacing)
    dim = values.ndim
    if values.max() <= 0.0 or values.min() >= 0.0:
        return np.zeros((0, dim)), np.zeros((0, dim), dtype=np.int64)
    if dim == 3:
        verts, faces, _, _ = measure.marching_cubes(values, level=0.0, spacing=(spacing,) * 3)
        return verts + origin, faces.astype(np.int64)
    verts, segments = [], []
    offset = 0
    for contour in measure.find_contours(values, 0.0):
        verts.append(origin + spacing * contour)
        n = len(contour)
        segments.append(np.stack([np.arange(n - 1), np.arange(1, n)], axis=1) + offset)
        offset += n
    return np.concatenate(verts), np.concatenate(segments)


def write_obj(filename: str, vertices: np.ndarray, cells: np.ndarray) -> str:
    """Write triangles (``f``) or polylines (``l``) to a Wavefront OBJ file."""
    keyword = "f" if cells.shape[1] == 3 else "l"
    with atomic_write(filename) as f:
        f.write(f"# {len(vertices)} vertices, {len(cells)} {'faces' if keyword == 'f' else 'segments'}\n")
        for v in vertices:
            f.write("v " + " ".join(f"{c:.9g}" for c in np.pad(v, (0, 3 - len(v)))) + "\n")
        for c in cells:
            f.write(keyword + " " + " ".join(str(i + 1) for i in c) + "\n")
    return filename
