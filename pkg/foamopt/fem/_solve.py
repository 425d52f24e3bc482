import inspect
import logging
from typing import List, Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from foamopt.errors import SolverError, UnconstrainedModeError
from ._loads import LoadCase

RESIDUAL_RTOL = 1e-8
_DIRECT_MAX_DOFS = 300_000
_CG_TOL_KEY = "rtol" if "rtol" in inspect.signature(splinalg.cg).parameters else "tol"
_AXES = "xyz"


def rigid_modes(points: np.ndarray):
    """Unit-norm rigid body modes on ``points`` and their names.

    Returns:
        ``(modes, names)`` with ``modes`` of shape ``(n * d, m)``
    """
    points = np.asarray(points, dtype=np.float64)
    n, dim = points.shape
    x = points - points.mean(axis=0)
    modes, names = [], []
    for a in range(dim):
        m = np.zeros((n, dim))
        m[:, a] = 1.0
        modes.append(m)
        names.append(f"translation {_AXES[a]}")
    planes = [(0, 1, 2)] if dim == 2 else [(1, 2, 0), (2, 0, 1), (0, 1, 2)]
    for a, b, about in planes:
        m = np.zeros((n, dim))
        m[:, a] = -x[:, b]
        m[:, b] = x[:, a]
        modes.append(m)
        names.append(f"rotation about {_AXES[about]}")
    modes = np.stack([m.reshape(-1) for m in modes], axis=1)
    norms = np.linalg.norm(modes, axis=0)
    return modes / np.where(norms > 0, norms, 1.0), names


def unconstrained_modes(points: np.ndarray, fixed_dofs: np.ndarray, rtol: float = 1e-8) -> List[str]:
    """Names of the rigid motions the constrained DOFs leave free."""
    modes, names = rigid_modes(points)
    keep = np.linalg.norm(modes, axis=0) > 0
    modes = modes[:, keep]
    names = [n for n, k in zip(names, keep) if k]
    restricted = modes[np.asarray(fixed_dofs, dtype=np.int64)]
    if restricted.shape[0] == 0:
        return names
    _, s, vt = np.linalg.svd(restricted, full_matrices=True)
    s = np.concatenate([s, np.zeros(vt.shape[0] - len(s))])
    free = []
    for row in vt[s <= rtol * max(1.0, s.max(initial=0.0))]:
        free.append(names[int(np.argmax(np.abs(row)))])
    return free


def _jacobi(K):
    d = K.diagonal()
    return splinalg.LinearOperator(K.shape, matvec=lambda x: x / d, dtype=np.float64)


def solve(
    K: sparse.spmatrix,
    loadcase: LoadCase,
    points: Optional[np.ndarray] = None,
    method: str = "auto",
    rtol: float = RESIDUAL_RTOL,
) -> np.ndarray:
    """Solve ``K Q = f`` with Dirichlet DOFs eliminated.

    Args:
        K: assembled stiffness, symmetric
        loadcase: constraints and force
        points: node coordinates, used to name unconstrained rigid motions
        method: ``direct`` (sparse LU), ``cg`` (Jacobi preconditioned) or ``auto``
        rtol: required relative residual of the constrained system

    Returns:
        Q of shape ``(n_dofs,)`` with the prescribed values set exactly
    """
    n = K.shape[0]
    if loadcase.n_dofs != n:
        raise ValueError(f"load case has {loadcase.n_dofs} DOFs, the stiffness {n}")
    if points is not None:
        free_modes = unconstrained_modes(points, loadcase.dirichlet_dofs)
        if free_modes:
            raise UnconstrainedModeError(free_modes)

    Q = np.zeros(n)
    fixed = loadcase.dirichlet_dofs
    free = loadcase.free_dofs()
    Q[fixed] = loadcase.dirichlet_values
    K = sparse.csr_matrix(K)
    rhs = loadcase.force[free] - K[free][:, fixed] @ loadcase.dirichlet_values
    K_ff = K[free][:, free]
    norm = np.linalg.norm(rhs)
    if norm == 0.0:
        return Q
    if method == "auto":
        method = "direct" if len(free) <= _DIRECT_MAX_DOFS else "cg"

    if method == "direct":
        try:
            u = splinalg.splu(K_ff.tocsc()).solve(rhs)
        except RuntimeError as e:
            raise SolverError(f"Sparse LU failed on the constrained stiffness: {e}") from e
    elif method == "cg":
        u, info = splinalg.cg(K_ff, rhs, M=_jacobi(K_ff), maxiter=10 * len(free), **{_CG_TOL_KEY: 0.01 * rtol})
        if info != 0:
            raise SolverError(f"Conjugate gradients did not converge (info={info})")
    else:
        raise ValueError(f"Unknown solver method `{method}`")

    residual = np.linalg.norm(K_ff @ u - rhs) / norm
    if not np.isfinite(residual) or residual > rtol:
        raise SolverError(
            f"Relative residual {residual:.3e} of the {method} solve exceeds {rtol:.1e}; "
            "the constrained stiffness is singular or badly conditioned"
        )
    logging.debug(f"{method} solve of {len(free)} DOFs, relative residual {residual:.2e}")
    Q[free] = u
    return Q


def compliance(K, Q: np.ndarray, force: Optional[np.ndarray] = None, rtol: float = RESIDUAL_RTOL) -> float:
    """``C = 1/2 Q^T K Q``; with ``force`` also ``1/2 f^T Q``, which is returned.

    The two agree for homogeneous constraints; a mismatch is logged.
    """
    Q = np.asarray(Q, dtype=np.float64)
    energy = 0.5 * float(Q @ (K @ Q))
    if force is None:
        return energy
    work = 0.5 * float(np.asarray(force) @ Q)
    scale = max(abs(work), abs(energy))
    if scale > 0 and abs(work - energy) > rtol * scale:
        logging.warning(
            f"Compliance mismatch: 1/2 f.Q = {work:.10g}, 1/2 Q.K.Q = {energy:.10g} "
            f"(relative {abs(work - energy) / scale:.2e})"
        )
    return work


def compliance_error(c: float, c_ref: float) -> float:
    """Squared relative error ``(C - C_ref)^2 / C_ref^2``."""
    return float((c - c_ref) ** 2 / c_ref**2)
