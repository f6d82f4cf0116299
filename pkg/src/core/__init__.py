"""Foundational math types, covariance, camera model and SH colour."""

from src.core.types import (
    DTYPE,
    Camera,
    Gaussian3D,
    GaussianScene,
    Image,
    Intrinsics,
    as_tensor,
)
from src.core.covariance import build_covariance, quaternion_to_rotation, to_camera
from src.core.sh import eval_sh

__all__ = [
    "DTYPE",
    "Camera",
    "Gaussian3D",
    "GaussianScene",
    "Image",
    "Intrinsics",
    "as_tensor",
    "build_covariance",
    "eval_sh",
    "quaternion_to_rotation",
    "to_camera",
]
