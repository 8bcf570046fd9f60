"""sphereot: optimal transport maps between distributions on the unit sphere.

Transport maps are induced by gradients of input-convex potential
networks trained under a minimax dual with the logarithmic cost
log(2 - <x, y>), and validated against exact discrete assignment
oracles and synthetic sphere experiments.
"""

__version__ = "0.1.0"

from .geometry import (
    PointCloud,
    UnitVector,
    log_cost,
    mollweide_project,
    normalize,
    spherical_distance,
)

__all__ = [
    "PointCloud",
    "UnitVector",
    "normalize",
    "spherical_distance",
    "log_cost",
    "mollweide_project",
    "__version__",
]
