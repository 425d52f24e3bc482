import numpy as np


class Material:
    """Isotropic linear-elastic solid.

    Args:
        young: Young's modulus ``E``
        poisson: Poisson ratio, in ``(-1, 0.5)``
        plane: ``stress`` or ``strain``, the 2D idealization
    """

    def __init__(self, young: float = 1.0, poisson: float = 0.3, plane: str = "stress"):
        self.young = float(young)
        self.poisson = float(poisson)
        self.plane = str(plane).lower()
        if not self.young > 0:
            raise ValueError(f"Young's modulus must be positive, got {young}")
        if not -1.0 < self.poisson < 0.5:
            raise ValueError(f"Poisson ratio must lie in (-1, 0.5), got {poisson}")
        if self.plane not in ("stress", "strain"):
            raise ValueError(f"plane must be `stress` or `strain`, got {plane}")

    def __repr__(self):
        return f"Material(young={self.young:g}, poisson={self.poisson:g}, plane={self.plane})"

    def elasticity(self, dim: int) -> np.ndarray:
        """Voigt elasticity matrix with engineering shear strains.

        Ordering is ``xx, yy, xy`` in 2D and ``xx, yy, zz, yz, xz, xy`` in 3D.
        """
        E, nu = self.young, self.poisson
        if dim == 2:
            if self.plane == "stress":
                c = E / (1.0 - nu**2)
                return c * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, (1.0 - nu) / 2.0]])
            c = E / ((1.0 + nu) * (1.0 - 2.0 * nu))
            return c * np.array(
                [[1.0 - nu, nu, 0.0], [nu, 1.0 - nu, 0.0], [0.0, 0.0, (1.0 - 2.0 * nu) / 2.0]]
            )
        if dim != 3:
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
        mu = E / (2.0 * (1.0 + nu))
        D = np.zeros((6, 6))
        D[:3, :3] = lam
        D[np.arange(3), np.arange(3)] += 2.0 * mu
        D[np.arange(3, 6), np.arange(3, 6)] = mu
        return D
