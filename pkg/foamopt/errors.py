"""Exceptions raised by foamopt.

The command line maps them onto exit codes, see ``foamopt.scripts.cli``.
"""
from typing import List, Tuple


class FoamOptError(Exception):
    """Base class of every error raised on purpose by foamopt."""


class ConfigError(FoamOptError, ValueError):
    pass


class DuplicateSeedError(FoamOptError, ValueError):
    """Two or more seeds coincide within the tessellation tolerance.

    Args:
        pairs: sorted list of ``(i, j)`` seed index pairs with ``i < j``
    """

    def __init__(self, pairs: List[Tuple[int, int]], tol: float):
        self.pairs = sorted((int(min(p)), int(max(p))) for p in pairs)
        self.tol = tol
        shown = ", ".join(f"({i}, {j})" for i, j in self.pairs[:10])
        more = "" if len(self.pairs) <= 10 else f" and {len(self.pairs) - 10} more"
        super().__init__(
            f"Coincident seeds (distance < {tol:.3g}): {shown}{more}. Remove or move them."
        )


class DegenerateConfigurationError(FoamOptError, ValueError):
    pass


class EmptyDomainError(FoamOptError, ValueError):
    pass


class InvertedElementError(FoamOptError, ValueError):
    def __init__(self, elements, volumes):
        self.elements = list(elements)
        super().__init__(
            f"{len(self.elements)} simplex element(s) have non-positive volume, "
            f"first ids {self.elements[:5]} with volumes {list(volumes[:5])}"
        )


class SolverError(FoamOptError, RuntimeError):
    pass


class UnconstrainedModeError(SolverError):
    def __init__(self, modes: List[str]):
        self.modes = modes
        super().__init__(
            "Constrained stiffness is singular, the boundary conditions leave rigid motion(s) free: "
            + ", ".join(modes)
        )


class SingularInteriorError(SolverError):
    pass
