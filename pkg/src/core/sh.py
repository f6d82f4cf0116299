"""Real spherical harmonics colour evaluation (degrees 0-3)."""

import torch

from src.core.types import SH_COUNTS
from src.utils.errors import InvalidParameterError

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
)
SH_C3 = (
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.4453057213202769,
    -0.5900435899266435,
)


def sh_basis(view_dir: torch.Tensor, degree: int) -> torch.Tensor:
    """
    Evaluate the real SH basis used by 3DGS point clouds.

    Args:
        view_dir: Unit directions, shape (..., 3)
        degree: Highest band (0-3)

    Returns:
        Basis values, shape (..., (degree + 1) ** 2)
    """
    x, y, z = view_dir.unbind(-1)
    terms = [torch.full_like(x, SH_C0)]

    if degree >= 1:
        terms += [-SH_C1 * y, SH_C1 * z, -SH_C1 * x]

    if degree >= 2:
        xx, yy, zz = x * x, y * y, z * z
        terms += [
            SH_C2[0] * x * y,
            SH_C2[1] * y * z,
            SH_C2[2] * (2.0 * zz - xx - yy),
            SH_C2[3] * x * z,
            SH_C2[4] * (xx - yy),
        ]

    if degree >= 3:
        terms += [
            SH_C3[0] * y * (3.0 * xx - yy),
            SH_C3[1] * x * y * z,
            SH_C3[2] * y * (4.0 * zz - xx - yy),
            SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
            SH_C3[4] * x * (4.0 * zz - xx - yy),
            SH_C3[5] * z * (xx - yy),
            SH_C3[6] * x * (xx - 3.0 * yy),
        ]

    return torch.stack(terms, dim=-1)


def eval_sh(sh_coeffs: torch.Tensor, view_dir: torch.Tensor, degree: int, clamp: bool = True) -> torch.Tensor:
    """
    Colour of a Gaussian seen along `view_dir`.

    Follows the 3DGS convention: basis . coeffs + 0.5, clamped at zero.

    Args:
        sh_coeffs: Coefficients, shape (..., K, 3)
        view_dir: Unit viewing directions, shape (..., 3)
        degree: Band to evaluate up to; must not exceed what K stores
        clamp: Apply the lower clamp at 0 (disable to inspect raw values)

    Returns:
        RGB, shape (..., 3)
    """
    if not 0 <= degree <= 3:
        raise InvalidParameterError(f"SH degree must be within 0..3, got {degree}")
    needed = SH_COUNTS[degree]
    if sh_coeffs.shape[-2] < needed:
        raise InvalidParameterError(
            f"SH degree {degree} needs {needed} coefficients, only {sh_coeffs.shape[-2]} stored"
        )

    basis = sh_basis(view_dir, degree)
    rgb = (basis.unsqueeze(-1) * sh_coeffs[..., :needed, :]).sum(dim=-2) + 0.5
    return rgb.clamp_min(0.0) if clamp else rgb
