"""Affine (3DGS) and exact tangent-cone projections of 3D Gaussians."""

from src.projection.splat import ConeMatrix, ConicClass, ConicKind, Splat2D
from src.projection.affine import affine_jacobian, project_affine
from src.projection.conic import (
    cone_matrix,
    conic_on_unit_plane,
    ellipsoid_form,
    project_conic,
    to_image_plane,
)

from src.utils.errors import InvalidParameterError

PROJECTION_MODES = ("affine", "conic")


def project(mode: str, cov_c, p_c, cam, source_index=0) -> Splat2D:
    """Dispatch to the projection named by `mode`."""
    if mode == "affine":
        return project_affine(cov_c, p_c, cam, source_index)
    if mode == "conic":
        return project_conic(cov_c, p_c, cam, source_index)
    raise InvalidParameterError(f"Unknown projection mode: {mode!r} (expected one of {PROJECTION_MODES})")


__all__ = [
    "PROJECTION_MODES",
    "ConeMatrix",
    "ConicClass",
    "ConicKind",
    "Splat2D",
    "affine_jacobian",
    "cone_matrix",
    "conic_on_unit_plane",
    "ellipsoid_form",
    "project",
    "project_affine",
    "project_conic",
    "to_image_plane",
]
