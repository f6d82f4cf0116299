"""Affine-versus-conic comparison and filter statistics."""

from src.analysis.compare import (
    COLUMNS,
    ComparisonRow,
    angular_radius,
    center_shift,
    compare_cameras,
    compare_scene,
    ellipse_boundary,
    hausdorff_distance,
    mean_radius,
)
from src.analysis.stats import filter_stats

__all__ = [
    "COLUMNS",
    "ComparisonRow",
    "angular_radius",
    "center_shift",
    "compare_cameras",
    "compare_scene",
    "ellipse_boundary",
    "filter_stats",
    "hausdorff_distance",
    "mean_radius",
]
