"""Reject Gaussians the conic projection cannot handle, plus frustum culling."""

from src.prefilter.filters import (
    DEFAULT_MARGIN_PX,
    REASON_ORDER,
    FilterReason,
    FilterVerdict,
    camera_inside,
    filter_reasons,
    frustum_cull,
    min_depth,
    prefilter,
)

__all__ = [
    "DEFAULT_MARGIN_PX",
    "REASON_ORDER",
    "FilterReason",
    "FilterVerdict",
    "camera_inside",
    "filter_reasons",
    "frustum_cull",
    "min_depth",
    "prefilter",
]
