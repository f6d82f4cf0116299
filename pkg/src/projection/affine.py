"""Baseline 3DGS projection through the Jacobian of the local affine approximation."""

from typing import Union

import torch

from src.core.types import Camera, Intrinsics, first_index, intrinsics_of
from src.projection.splat import Splat2D, invert_2x2
from src.utils.errors import BehindCameraError, DegenerateSplatError

# det(cov2d) below this fraction of trace^2 counts as singular
DEGENERATE_RATIO = 1e-14


def affine_jacobian(p_c: torch.Tensor, cam: Union[Camera, Intrinsics]) -> torch.Tensor:
    """
    Jacobian of (x, y, z) -> (fx x / z, fy y / z) evaluated at p_c.

    Args:
        p_c: Camera-space centres, shape (..., 3)
        cam: Camera or intrinsics

    Returns:
        J of shape (..., 2, 3)
    """
    intr = intrinsics_of(cam)
    x, y, z = p_c.unbind(-1)
    behind = z <= 0
    if bool(behind.any()):
        raise BehindCameraError(f"Point {first_index(behind)} has z <= 0; affine projection undefined")

    zero = torch.zeros_like(z)
    inv_z = 1.0 / z
    row0 = torch.stack([intr.fx * inv_z, zero, -intr.fx * x * inv_z * inv_z], dim=-1)
    row1 = torch.stack([zero, intr.fy * inv_z, -intr.fy * y * inv_z * inv_z], dim=-1)
    return torch.stack([row0, row1], dim=-2)


def affine_covariance(cov_c: torch.Tensor, p_c: torch.Tensor, cam: Union[Camera, Intrinsics]) -> torch.Tensor:
    """Unit-variance image covariance J Sigma_c J^T (the third row and column dropped)."""
    J = affine_jacobian(p_c, cam)
    cov2d = J @ cov_c @ J.transpose(-1, -2)
    return 0.5 * (cov2d + cov2d.transpose(-1, -2))


def project_affine(
    cov_c: torch.Tensor,
    p_c: torch.Tensor,
    cam: Union[Camera, Intrinsics],
    source_index: Union[int, torch.Tensor] = 0,
) -> Splat2D:
    """
    Project a camera-space Gaussian the way 3DGS does.

    The centre is the pinhole projection of p_c; the 3-sigma silhouette of
    the returned splat is the level (x - c)^T cov2d^-1 (x - c) = 9, so
    `inv_cov` is simply cov2d^-1.

    Args:
        cov_c: Camera-space covariance, shape (..., 3, 3)
        p_c: Camera-space centre, shape (..., 3)
        cam: Camera or intrinsics
        source_index: Scene index (or indices) carried into the splat

    Returns:
        Splat2D
    """
    intr = intrinsics_of(cam)
    cov2d = affine_covariance(cov_c, p_c, cam)

    det = cov2d[..., 0, 0] * cov2d[..., 1, 1] - cov2d[..., 0, 1] ** 2
    trace = cov2d[..., 0, 0] + cov2d[..., 1, 1]
    singular = ~torch.isfinite(det) | (det <= DEGENERATE_RATIO * trace * trace)
    if bool(singular.any()):
        raise DegenerateSplatError(f"Projected covariance of splat {first_index(singular)} is singular")

    x, y, z = p_c.unbind(-1)
    center = torch.stack([intr.fx * x / z + intr.width / 2, intr.fy * y / z + intr.height / 2], dim=-1)
    return Splat2D(center=center, inv_cov=invert_2x2(cov2d), depth=z, source_index=source_index)
