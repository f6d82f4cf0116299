"""Covariance assembly and the world-to-camera transform."""

from typing import Tuple

import torch
import torch.nn.functional as F

from src.core.types import ArrayLike, Camera, as_tensor
from src.utils.errors import InvalidParameterError


def quaternion_to_rotation(q: torch.Tensor) -> torch.Tensor:
    """
    Convert (w, x, y, z) quaternions to rotation matrices.

    The quaternion is normalised here rather than at construction so that
    gradients flow through the normalisation. A zero quaternion (as found in
    all-zero PLY records) normalises to zero and yields the identity.

    Args:
        q: Quaternions of shape (..., 4)

    Returns:
        Rotation matrices of shape (..., 3, 3)
    """
    q = F.normalize(q, dim=-1)
    w, x, y, z = q.unbind(-1)

    rows = torch.stack([
        1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
    ], dim=-1)
    return rows.reshape(*q.shape[:-1], 3, 3)


def quaternion_multiply(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Hamilton product a * b of (w, x, y, z) quaternions."""
    aw, ax, ay, az = a.unbind(-1)
    bw, bx, by, bz = b.unbind(-1)
    return torch.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], dim=-1)


def build_covariance(rotation: ArrayLike, log_scales: ArrayLike) -> torch.Tensor:
    """
    Assemble Sigma = R S S^T R^T from a quaternion and log-scales.

    Args:
        rotation: Quaternion(s) (w, x, y, z), shape (..., 4)
        log_scales: Log standard deviations, shape (..., 3)

    Returns:
        Symmetric positive definite covariance, shape (..., 3, 3)
    """
    rotation = as_tensor(rotation)
    log_scales = as_tensor(log_scales)
    if not bool(torch.isfinite(rotation).all() and torch.isfinite(log_scales).all()):
        raise InvalidParameterError("Covariance inputs must be finite")

    R = quaternion_to_rotation(rotation)
    variances = torch.exp(2.0 * log_scales)
    cov = (R * variances.unsqueeze(-2)) @ R.transpose(-1, -2)
    return 0.5 * (cov + cov.transpose(-1, -2))


def to_camera(cov: torch.Tensor, position: torch.Tensor, cam: Camera) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Move a covariance and centre into camera space.

    Only the rotation block of W acts on the covariance; the translation acts
    on the centre alone.

    Args:
        cov: World covariance, shape (..., 3, 3)
        position: World centre, shape (..., 3)
        cam: Camera holding the rigid transform

    Returns:
        (cov_c, p_c) in camera space
    """
    R, t = cam.rotation, cam.translation
    cov_c = R @ cov @ R.T
    p_c = position @ R.T + t
    return 0.5 * (cov_c + cov_c.transpose(-1, -2)), p_c
