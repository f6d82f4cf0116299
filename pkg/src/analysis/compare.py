"""Side-by-side comparison of the affine and the exact conic projection."""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch
from scipy.spatial.distance import directed_hausdorff

from src.core.covariance import build_covariance, to_camera
from src.core.types import Camera, GaussianScene
from src.prefilter.filters import REASON_ORDER, filter_reasons
from src.projection.affine import project_affine
from src.projection.conic import KIND_ORDER, SIGMA_LEVEL, classify_cone, cone_matrix, ellipsoid_form, project_conic
from src.projection.splat import Splat2D
from src.raster.rasterizer import SceneLike
from src.utils.logger import get_logger

logger = get_logger("conicsplat.analysis")

DEFAULT_SAMPLES = 256

COLUMNS = (
    "index", "verdict", "reason", "conic_class", "center_shift_px", "hausdorff_px",
    "conic_radius_px", "affine_radius_px", "angular_radius",
)


@dataclass(frozen=True)
class ComparisonRow:
    """Affine-versus-conic metrics for one Gaussian; NaN where the Gaussian was filtered."""

    index: int
    verdict: str
    reason: str
    conic_class: str
    center_shift_px: float
    hausdorff_px: float
    conic_radius_px: float
    affine_radius_px: float
    angular_radius: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in COLUMNS)


def center_shift(affine: Splat2D, conic: Splat2D) -> float:
    """Pixel distance between the two splat centres."""
    return float((affine.center - conic.center).norm())


def ellipse_boundary(splat: Splat2D, k: int = DEFAULT_SAMPLES) -> np.ndarray:
    """
    k points on the 3-sigma silhouette of a single splat.

    Returns:
        Array of shape (k, 2) in pixels
    """
    L = np.linalg.cholesky(splat.cov.detach().numpy())
    angles = 2.0 * np.pi * np.arange(k) / k
    circle = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    return splat.center.detach().numpy() + math.sqrt(SIGMA_LEVEL) * circle @ L.T


def hausdorff_distance(a: Splat2D, b: Splat2D, samples: int = DEFAULT_SAMPLES) -> float:
    """Symmetric Hausdorff distance between sampled silhouettes, in pixels."""
    pa, pb = ellipse_boundary(a, samples), ellipse_boundary(b, samples)
    return max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0])


def mean_radius(splat: Splat2D) -> float:
    """Geometric-mean radius of the silhouette, 3 * det(cov)^(1/4)."""
    return 3.0 * float(torch.linalg.det(splat.cov)) ** 0.25


def angular_radius(cov_c: torch.Tensor, p_c: torch.Tensor) -> float:
    """Largest 3-sigma half-extent divided by depth."""
    extent = 3.0 * math.sqrt(float(torch.linalg.eigvalsh(cov_c)[-1]))
    return extent / float(p_c[2])


def _conic_class(cov_c: torch.Tensor, p_c: torch.Tensor, code: int) -> str:
    if REASON_ORDER[code].value in ("camera-inside", "ill-conditioned"):
        return "undefined"
    A, _ = ellipsoid_form(cov_c, p_c)
    kinds, _, _ = classify_cone(cone_matrix(A, p_c).q)
    return KIND_ORDER[int(kinds)].value


def compare_scene(
    scene: SceneLike,
    cam: Camera,
    samples: int = DEFAULT_SAMPLES,
    margin_px: Optional[float] = None,
) -> List[ComparisonRow]:
    """
    Project every Gaussian both ways and measure how far the results differ.

    Rows are in scene order.
    """
    if not isinstance(scene, GaussianScene):
        scene = GaussianScene.from_gaussians(list(scene))
    if len(scene) == 0:
        return []

    with torch.no_grad():
        cov = build_covariance(scene.rotations, scene.log_scales)
        cov_c, p_c = to_camera(cov, scene.positions, cam)
        kwargs = {} if margin_px is None else {"margin_px": margin_px}
        codes = filter_reasons(cov_c, p_c, cam, **kwargs)

        rows = []
        nan = float("nan")
        for i in range(len(scene)):
            code = int(codes[i])
            reason = REASON_ORDER[code].value
            if code != 0:
                rows.append(ComparisonRow(i, "reject", reason, _conic_class(cov_c[i], p_c[i], code),
                                          nan, nan, nan, nan, nan))
                continue

            affine = project_affine(cov_c[i], p_c[i], cam, source_index=i)
            conic = project_conic(cov_c[i], p_c[i], cam, source_index=i)
            rows.append(ComparisonRow(
                index=i,
                verdict="keep",
                reason=reason,
                conic_class="ellipse",
                center_shift_px=center_shift(affine, conic),
                hausdorff_px=hausdorff_distance(affine, conic, samples),
                conic_radius_px=mean_radius(conic),
                affine_radius_px=mean_radius(affine),
                angular_radius=angular_radius(cov_c[i], p_c[i]),
            ))

    kept = [r for r in rows if r.verdict == "keep"]
    if kept:
        worst = max(kept, key=lambda r: r.hausdorff_px)
        logger.info(
            f"Camera {cam.camera_id}: {len(kept)}/{len(rows)} compared, "
            f"max Hausdorff {worst.hausdorff_px:.4g} px (Gaussian {worst.index})"
        )
    return rows


def compare_cameras(scene: SceneLike, cameras: Sequence[Camera], samples: int = DEFAULT_SAMPLES) -> List[tuple]:
    """compare_scene for every camera, rows prefixed with the camera id."""
    if not isinstance(scene, GaussianScene):
        scene = GaussianScene.from_gaussians(list(scene))
    return [(cam.camera_id,) + row.as_tuple() for cam in cameras for row in compare_scene(scene, cam, samples)]
