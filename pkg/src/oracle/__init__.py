"""Independent brute-force verifiers (numpy/scipy only)."""

from src.oracle.fd import fd_gradient
from src.oracle.rays import (
    RayQuadratic,
    ray_hits_by_bisection,
    ray_quadratic,
    silhouette_by_search,
    tangency_residual,
)
from src.oracle.surface import numerical_min_depth, sample_surface_min_depth, sample_surface_points

__all__ = [
    "RayQuadratic",
    "fd_gradient",
    "numerical_min_depth",
    "ray_hits_by_bisection",
    "ray_quadratic",
    "sample_surface_min_depth",
    "sample_surface_points",
    "silhouette_by_search",
    "tangency_residual",
]
