"""Pre-filtering of Gaussians the tangent-cone projection cannot handle."""

from dataclasses import dataclass
from enum import Enum
from typing import Union

import torch

from src.core.covariance import build_covariance, to_camera
from src.core.types import Camera, Gaussian3D, Intrinsics, intrinsics_of
from src.projection.conic import MAX_CONDITION, SIGMA_LEVEL, classify_cone, cone_matrix, to_image_plane
from src.projection.splat import Splat2D
from src.utils.errors import InvalidParameterError
from src.utils.logger import get_logger

logger = get_logger("conicsplat.prefilter")

DEFAULT_MARGIN_PX = 16.0


class FilterReason(str, Enum):
    """Why a Gaussian was rejected; NONE means it was kept."""
    NONE = "none"
    CAMERA_INSIDE = "camera-inside"
    BEHIND_PLANE = "behind-plane"
    OUT_OF_FRUSTUM = "out-of-frustum"
    ILL_CONDITIONED = "ill-conditioned"


# Index order of the integer codes returned by filter_reasons
REASON_ORDER = (
    FilterReason.NONE,
    FilterReason.CAMERA_INSIDE,
    FilterReason.BEHIND_PLANE,
    FilterReason.OUT_OF_FRUSTUM,
    FilterReason.ILL_CONDITIONED,
)


@dataclass(frozen=True)
class FilterVerdict:
    """Keep/reject decision for one Gaussian."""

    keep: bool
    reason: FilterReason = FilterReason.NONE

    def __post_init__(self):
        if self.keep != (self.reason is FilterReason.NONE):
            raise InvalidParameterError(f"Inconsistent verdict: keep={self.keep}, reason={self.reason.value}")

    @classmethod
    def from_code(cls, code: int) -> "FilterVerdict":
        reason = REASON_ORDER[int(code)]
        return cls(keep=reason is FilterReason.NONE, reason=reason)


def camera_inside(A: torch.Tensor, p_c: torch.Tensor) -> torch.Tensor:
    """True where the camera origin lies inside or on the 3-sigma ellipsoid."""
    level = (p_c * (A @ p_c.unsqueeze(-1)).squeeze(-1)).sum(dim=-1)
    return level <= SIGMA_LEVEL


def min_depth(cov_c: torch.Tensor, p_c: torch.Tensor) -> torch.Tensor:
    """
    Lowest camera-space z on the 3-sigma ellipsoid surface.

    At that point the surface normal is parallel to the z axis, which gives
    x - p_c = -3 Sigma_c n / sqrt(n^T Sigma_c n) with n = (0, 0, 1), hence
    z_min = p_c.z - 3 sqrt(Sigma_c[2, 2]).
    """
    return p_c[..., 2] - 3.0 * torch.sqrt(cov_c[..., 2, 2])


def frustum_cull(splat: Splat2D, cam: Union[Camera, Intrinsics], margin_px: float = DEFAULT_MARGIN_PX) -> torch.Tensor:
    """
    True where the splat's 3-sigma bounding box misses the dilated image rectangle.

    The box has half-extents 3 sqrt(diag(Sigma_img)); the test is
    conservative, a splat touching the rectangle is kept.
    """
    intr = intrinsics_of(cam)
    half = 3.0 * torch.sqrt(torch.diagonal(splat.cov, dim1=-2, dim2=-1))
    lo = splat.center - half
    hi = splat.center + half
    return (
        (hi[..., 0] < -margin_px)
        | (lo[..., 0] > intr.width + margin_px)
        | (hi[..., 1] < -margin_px)
        | (lo[..., 1] > intr.height + margin_px)
    )


def filter_reasons(
    cov_c: torch.Tensor,
    p_c: torch.Tensor,
    cam: Union[Camera, Intrinsics],
    margin_px: float = DEFAULT_MARGIN_PX,
    near_plane: float = 0.0,
) -> torch.Tensor:
    """
    Vectorised pre-filter over camera-space Gaussians.

    Covariances that cannot be inverted reliably (not positive definite,
    condition number above MAX_CONDITION, or a failed Cholesky) are rejected
    as ill-conditioned before anything else, so one degenerate Gaussian never
    stops a batch. The remaining checks run camera-inside, then behind-plane
    (z_min <= near_plane), then frustum; the first failure wins. Survivors
    whose cone section is not numerically an ellipse sit on the z_min = 0
    boundary and are reported as behind-plane. The frustum test uses the
    exact conic splat.

    Args:
        cov_c: Camera-space covariances, shape (N, 3, 3)
        p_c: Camera-space centres, shape (N, 3)
        cam: Camera or intrinsics
        margin_px: Frustum dilation in pixels
        near_plane: Extra clearance above z = 0 (0 reproduces the exact filter)

    Returns:
        Long tensor of codes indexing REASON_ORDER, shape (N,)
    """
    with torch.no_grad():
        cov_c = cov_c.detach()
        p_c = p_c.detach()
        codes = torch.zeros(p_c.shape[:-1], dtype=torch.long)
        cov_c = 0.5 * (cov_c + cov_c.transpose(-1, -2))

        # Same acceptance rule as ellipsoid_form, evaluated per Gaussian
        eig = torch.linalg.eigvalsh(cov_c)
        ill = (eig[..., 0] <= 0) | (eig[..., -1] > MAX_CONDITION * eig[..., 0])
        eye3 = torch.eye(3, dtype=cov_c.dtype).expand(cov_c.shape)
        L, info = torch.linalg.cholesky_ex(torch.where(ill[..., None, None], eye3, cov_c))
        ill = ill | (info != 0)
        codes[ill] = 4

        # Level p^T A p via a triangular solve, no explicit inverse needed
        y = torch.linalg.solve_triangular(L, p_c.unsqueeze(-1), upper=False).squeeze(-1)
        inside = ~ill & ((y * y).sum(dim=-1) <= SIGMA_LEVEL)
        codes[inside] = 1

        behind = (codes == 0) & (min_depth(cov_c, p_c) <= near_plane)
        codes[behind] = 2

        pending = torch.nonzero(codes == 0).reshape(-1)
        if pending.numel():
            eye = torch.eye(3, dtype=cov_c.dtype).expand(len(pending), 3, 3)
            A = torch.cholesky_solve(eye, L[pending])
            A = 0.5 * (A + A.transpose(-1, -2))
            cone = cone_matrix(A, p_c[pending])
            kinds, v0, M = classify_cone(cone.q)
            not_ellipse = kinds != 0
            codes[pending[not_ellipse]] = 2

            ok = ~not_ellipse
            if bool(ok.any()):
                splat = to_image_plane(v0[ok], M[ok], cam)
                outside = frustum_cull(splat, cam, margin_px)
                codes[pending[ok][outside]] = 3

    return codes


def prefilter(
    g: Gaussian3D,
    cam: Camera,
    margin_px: float = DEFAULT_MARGIN_PX,
    near_plane: float = 0.0,
) -> FilterVerdict:
    """
    Decide whether a Gaussian can be projected and is potentially visible.

    Args:
        g: Gaussian in world space
        cam: Viewing camera
        margin_px: Frustum dilation in pixels
        near_plane: Extra clearance above z = 0

    Returns:
        FilterVerdict
    """
    cov = build_covariance(g.rotation, g.log_scales)
    cov_c, p_c = to_camera(cov, g.position, cam)
    code = filter_reasons(cov_c.unsqueeze(0), p_c.unsqueeze(0), cam, margin_px, near_plane)[0]
    verdict = FilterVerdict.from_code(int(code))
    logger.debug(f"Prefilter verdict: {verdict.reason.value}")
    return verdict
