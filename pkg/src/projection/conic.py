"""
Exact projection of the 3-sigma Gaussian ellipsoid through its tangent cone.

The ellipsoid (x - p)^T A (x - p) = 9 with A = Sigma_c^-1 is seen from the
camera origin. Rays x = t d tangent to it satisfy

    (p^T A d)^2 - (d^T A d)(p^T A p - 9) = 0,

i.e. d^T Q d = 0 with Q = A p p^T A - (p^T A p - 9) A: a cone with its apex
at the camera. Intersecting with the plane z = 1 (d = (v, 1)) and partitioning

    Q = [[Q2, q], [q^T, q33]]

gives the conic v^T Q2 v + 2 q^T v + q33 = 0. When Q2 is definite, completing
the square around v0 = -Q2^-1 q yields

    (v - v0)^T Q2 (v - v0) + c0 = 0,    c0 = q33 - q^T Q2^-1 q,

so (v - v0)^T M (v - v0) = 9 with M = -9 Q2 / c0. M is unchanged when Q is
negated, so the arbitrary global sign of the homogeneous cone drops out; for
a real ellipse M is positive definite. Scaling by the focal lengths and
shifting by half the image size maps the z = 1 plane to pixels.

Note the ellipse centre v0 is in general not the projection p_xy / p_z of the
Gaussian centre.
"""

from typing import Optional, Tuple, Union

import torch

from src.core.types import DTYPE, Camera, Intrinsics, first_index, intrinsics_of
from src.projection.splat import ConeMatrix, ConicClass, ConicKind, Splat2D, invert_2x2
from src.utils.errors import (
    CameraInsideError,
    IllConditionedError,
    InvalidParameterError,
    NonEllipseConicError,
)

SIGMA_LEVEL = 9.0
MAX_CONDITION = 1e12
PARABOLA_TOLERANCE = 1e-12

KIND_ORDER = (ConicKind.ELLIPSE, ConicKind.PARABOLA, ConicKind.HYPERBOLA, ConicKind.DEGENERATE)


def _symmetrize(m: torch.Tensor) -> torch.Tensor:
    return 0.5 * (m + m.transpose(-1, -2))


def ellipsoid_form(cov_c: torch.Tensor, p_c: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Quadratic form A = Sigma_c^-1 of the 3-sigma ellipsoid around p_c.

    Args:
        cov_c: SPD camera-space covariance, shape (..., 3, 3)
        p_c: Camera-space centre, shape (..., 3)

    Returns:
        (A, p_c) with A SPD
    """
    with torch.no_grad():
        eig = torch.linalg.eigvalsh(_symmetrize(cov_c))
        if bool((eig[..., 0] <= 0).any()):
            raise InvalidParameterError(f"Covariance {first_index(eig[..., 0] <= 0)} is not positive definite")
        bad = eig[..., -1] / eig[..., 0] > MAX_CONDITION
        if bool(bad.any()):
            raise IllConditionedError(f"Covariance {first_index(bad)} has condition number above {MAX_CONDITION:g}")

    L = torch.linalg.cholesky(_symmetrize(cov_c))
    eye = torch.eye(3, dtype=cov_c.dtype).expand(L.shape)
    A = torch.cholesky_solve(eye, L)
    return _symmetrize(A), p_c


def cone_matrix(A: torch.Tensor, p_c: torch.Tensor) -> ConeMatrix:
    """
    Tangent cone Q = A p p^T A - (p^T A p - 9) A with apex at the camera origin.

    Raises:
        CameraInsideError: if p^T A p <= 9 (no tangent rays exist)
    """
    Ap = (A @ p_c.unsqueeze(-1)).squeeze(-1)
    level = (p_c * Ap).sum(dim=-1)
    inside = level <= SIGMA_LEVEL
    if bool(inside.any()):
        raise CameraInsideError(f"Camera origin lies inside the 3-sigma ellipsoid of Gaussian {first_index(inside)}")

    q = Ap.unsqueeze(-1) * Ap.unsqueeze(-2) - (level - SIGMA_LEVEL)[..., None, None] * A
    return ConeMatrix(q=_symmetrize(q))


def classify_cone(q: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    Vectorised z = 1 restriction of cone matrices.

    Args:
        q: Cone matrices, shape (..., 3, 3)

    Returns:
        (codes, v0, M): codes index `KIND_ORDER`; v0 and M are meaningful
        only where the code is ELLIPSE
    """
    q2 = q[..., :2, :2]
    qv = q[..., :2, 2]
    q33 = q[..., 2, 2]

    det = q2[..., 0, 0] * q2[..., 1, 1] - q2[..., 0, 1] * q2[..., 1, 0]
    norm2 = (q2 * q2).sum(dim=(-1, -2))
    parabola = det.abs() <= PARABOLA_TOLERANCE * norm2
    hyperbola = ~parabola & (det < 0)

    v0 = -(invert_2x2(q2) @ qv.unsqueeze(-1)).squeeze(-1)
    c0 = q33 + (qv * v0).sum(dim=-1)
    M = -SIGMA_LEVEL * q2 / c0[..., None, None]
    real = (c0 != 0) & (M[..., 0, 0] > 0) & torch.isfinite(M).all(dim=-1).all(dim=-1)
    ellipse = ~parabola & ~hyperbola & real

    codes = torch.where(
        ellipse, 0, torch.where(parabola, 1, torch.where(hyperbola, 2, 3))
    ).to(torch.long)
    return codes, v0, _symmetrize(M)


def conic_on_unit_plane(cone: ConeMatrix) -> ConicClass:
    """
    Intersect a single tangent cone with the plane z = 1 and classify the curve.

    Non-ellipses are reported in `kind`, never converted.
    """
    q = cone.q
    codes, v0, M = classify_cone(q)
    kind = KIND_ORDER[int(codes)]
    ellipse = kind is ConicKind.ELLIPSE
    return ConicClass(
        kind=kind,
        q2=q[:2, :2],
        q=q[:2, 2],
        q33=q[2, 2],
        center=v0 if ellipse else None,
        m=M if ellipse else None,
    )


def to_image_plane(
    v0: torch.Tensor,
    M: torch.Tensor,
    cam: Union[Camera, Intrinsics],
    depth: Optional[torch.Tensor] = None,
    source_index: Union[int, torch.Tensor] = 0,
) -> Splat2D:
    """
    Map an ellipse on the z = 1 plane to pixels.

    p_img = F v0 + (w/2, h/2) and Sigma_img^-1 = F^-1 M F^-1 with
    F = diag(fx, fy), which keeps the silhouette at level 9.

    Args:
        v0: Ellipse centre on z = 1, shape (..., 2)
        M: SPD level-9 form on z = 1, shape (..., 2, 2)
        cam: Camera or intrinsics
        depth: Sort depth to carry (camera-space z of the Gaussian centre)
        source_index: Scene index (or indices)
    """
    intr = intrinsics_of(cam)
    focal = torch.tensor([intr.fx, intr.fy], dtype=v0.dtype)
    offset = torch.tensor([intr.width / 2, intr.height / 2], dtype=v0.dtype)

    center = v0 * focal + offset
    inv_cov = M / (focal.unsqueeze(-1) * focal.unsqueeze(-2))
    if depth is None:
        depth = torch.ones(v0.shape[:-1], dtype=DTYPE)
    return Splat2D(center=center, inv_cov=inv_cov, depth=depth, source_index=source_index)


def project_conic(
    cov_c: torch.Tensor,
    p_c: torch.Tensor,
    cam: Union[Camera, Intrinsics],
    source_index: Union[int, torch.Tensor] = 0,
) -> Splat2D:
    """
    Project camera-space Gaussians exactly via their tangent cones.

    Callers are expected to have run the pre-filter; the errors below mean it
    was bypassed.

    Raises:
        CameraInsideError: camera inside a 3-sigma ellipsoid
        NonEllipseConicError: the silhouette is a parabola, hyperbola or empty
        IllConditionedError: covariance too badly conditioned to invert
    """
    A, p_c = ellipsoid_form(cov_c, p_c)
    cone = cone_matrix(A, p_c)
    codes, v0, M = classify_cone(cone.q)

    bad = codes != 0
    if bool(bad.any()):
        index = first_index(bad)
        kind = KIND_ORDER[int(codes.reshape(-1)[index])]
        raise NonEllipseConicError(f"Gaussian {index} projects to a {kind.value}, not an ellipse")

    return to_image_plane(v0, M, cam, depth=p_c[..., 2], source_index=source_index)
