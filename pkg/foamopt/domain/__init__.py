from ._primitives import DomainField, Box, Sphere, Cylinder, Union, SDFGrid
from ._build import domain_from_config

__all__ = [DomainField, Box, Sphere, Cylinder, Union, SDFGrid, domain_from_config]
