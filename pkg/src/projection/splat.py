"""Projected primitive types shared by both projection paths."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import torch

from src.core.types import DTYPE


@dataclass(frozen=True, eq=False)
class Splat2D:
    """
    A Gaussian projected onto the image.

    `inv_cov` is stored at the 3-sigma convention: on the silhouette,
    (x - center)^T inv_cov (x - center) = 9. Its inverse is therefore the
    unit-variance 2D covariance.

    Fields may carry a leading batch dimension; `source_index` is then a
    tensor of scene indices.
    """

    center: torch.Tensor                       # (..., 2) pixels
    inv_cov: torch.Tensor                      # (..., 2, 2) 1/pixels^2
    depth: torch.Tensor                        # (...) camera-space z of the Gaussian centre
    source_index: Union[int, torch.Tensor] = 0

    @property
    def cov(self) -> torch.Tensor:
        """Unit-variance 2D covariance (inverse of `inv_cov`)."""
        return invert_2x2(self.inv_cov)

    def __len__(self) -> int:
        return int(self.center.shape[0]) if self.center.ndim > 1 else 1

    def __getitem__(self, index) -> "Splat2D":
        source = self.source_index[index] if isinstance(self.source_index, torch.Tensor) else self.source_index
        if isinstance(source, torch.Tensor) and source.ndim == 0:
            source = int(source)
        return Splat2D(self.center[index], self.inv_cov[index], self.depth[index], source)

    @staticmethod
    def stack(splats: Sequence["Splat2D"]) -> "Splat2D":
        if not splats:
            return Splat2D(
                center=torch.zeros(0, 2, dtype=DTYPE),
                inv_cov=torch.zeros(0, 2, 2, dtype=DTYPE),
                depth=torch.zeros(0, dtype=DTYPE),
                source_index=torch.zeros(0, dtype=torch.long),
            )
        return Splat2D(
            center=torch.stack([s.center for s in splats]),
            inv_cov=torch.stack([s.inv_cov for s in splats]),
            depth=torch.stack([torch.as_tensor(s.depth, dtype=DTYPE) for s in splats]),
            source_index=torch.tensor([int(s.source_index) for s in splats], dtype=torch.long),
        )


@dataclass(frozen=True, eq=False)
class ConeMatrix:
    """Quadratic form x^T q x = 0 of the tangent cone, apex at the camera origin."""

    q: torch.Tensor  # (..., 3, 3)


class ConicKind(str, Enum):
    """Type of the curve the tangent cone leaves on the z = 1 plane."""
    ELLIPSE = "ellipse"
    PARABOLA = "parabola"
    HYPERBOLA = "hyperbola"
    DEGENERATE = "degenerate"


@dataclass(frozen=True, eq=False)
class ConicClass:
    """
    Classification of v^T Q2 v + 2 q^T v + q33 = 0 on the z = 1 plane.

    `center` and `m` are filled only for ellipses; then
    (v - center)^T m (v - center) = 9 on the curve and m is SPD.
    """

    kind: ConicKind
    q2: torch.Tensor
    q: torch.Tensor
    q33: torch.Tensor
    center: Optional[torch.Tensor] = None
    m: Optional[torch.Tensor] = None


def invert_2x2(m: torch.Tensor) -> torch.Tensor:
    """Closed-form inverse of symmetric 2x2 matrices, shape (..., 2, 2)."""
    a, b, c = m[..., 0, 0], m[..., 0, 1], m[..., 1, 1]
    det = a * c - b * b
    inv = torch.stack([torch.stack([c, -b], dim=-1), torch.stack([-b, a], dim=-1)], dim=-2)
    return inv / det[..., None, None]
