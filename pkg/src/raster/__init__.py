"""Tiled alpha-blending rasterizer."""

from src.raster.options import RenderOptions
from src.raster.rasterizer import (
    Rasterizer,
    RenderResult,
    depth_sort,
    gaussian_weight,
    render,
    resolve_workers,
    weight_from_covariance,
)

__all__ = [
    "RenderOptions",
    "Rasterizer",
    "RenderResult",
    "depth_sort",
    "gaussian_weight",
    "render",
    "resolve_workers",
    "weight_from_covariance",
]
