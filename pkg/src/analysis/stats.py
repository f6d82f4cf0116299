"""Per-camera pre-filter statistics."""

from typing import Dict, List, Optional, Sequence

import torch

from src.core.covariance import build_covariance, to_camera
from src.core.types import Camera, GaussianScene
from src.prefilter.filters import DEFAULT_MARGIN_PX, REASON_ORDER, filter_reasons
from src.raster.rasterizer import SceneLike
from src.utils.logger import get_logger

logger = get_logger("conicsplat.analysis")


def filter_stats(
    scene: SceneLike,
    cameras: Sequence[Camera],
    margin_px: Optional[float] = None,
) -> List[Dict[str, int]]:
    """
    Count pre-filter outcomes per camera.

    Returns:
        One dict per camera: camera id, total, and a count per reason
        ("none" counts the kept Gaussians)
    """
    if not isinstance(scene, GaussianScene):
        scene = GaussianScene.from_gaussians(list(scene))
    margin_px = DEFAULT_MARGIN_PX if margin_px is None else margin_px

    with torch.no_grad():
        cov = build_covariance(scene.rotations, scene.log_scales) if len(scene) else None
        stats = []
        for cam in cameras:
            counts = {"camera": cam.camera_id, "total": len(scene)}
            counts.update({reason.value: 0 for reason in REASON_ORDER})
            if len(scene):
                cov_c, p_c = to_camera(cov, scene.positions, cam)
                codes = filter_reasons(cov_c, p_c, cam, margin_px)
                for i, reason in enumerate(REASON_ORDER):
                    counts[reason.value] = int((codes == i).sum())
            logger.debug(f"Camera {cam.camera_id}: {counts}")
            stats.append(counts)
    return stats
