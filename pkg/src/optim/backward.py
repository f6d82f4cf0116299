"""Exact gradients of the photometric loss with respect to every Gaussian parameter."""

from dataclasses import dataclass
from typing import Optional, Tuple

import torch

from src.core.types import Camera, GaussianScene, Image
from src.optim.metrics import DEFAULT_LAMBDA, loss
from src.raster.options import RenderOptions
from src.raster.rasterizer import Rasterizer, SceneLike


@dataclass
class ParamGradients:
    """Per-Gaussian loss gradients, laid out like GaussianScene."""

    d_position: torch.Tensor         # (N, 3)
    d_rotation: torch.Tensor         # (N, 4) before quaternion normalisation
    d_log_scales: torch.Tensor       # (N, 3)
    d_opacity_logit: torch.Tensor    # (N,)
    d_sh: torch.Tensor               # (N, K, 3)

    def flat(self, index: int) -> torch.Tensor:
        """All gradient entries of Gaussian `index` as one vector (position, rotation, scales, opacity, SH)."""
        return torch.cat([
            self.d_position[index],
            self.d_rotation[index],
            self.d_log_scales[index],
            self.d_opacity_logit[index].reshape(1),
            self.d_sh[index].reshape(-1),
        ])

    def is_finite(self) -> bool:
        return all(bool(torch.isfinite(t).all()) for t in
                   (self.d_position, self.d_rotation, self.d_log_scales, self.d_opacity_logit, self.d_sh))


def backward(
    scene: SceneLike,
    cam: Camera,
    ref: Image,
    opts: Optional[RenderOptions] = None,
    projection: str = "conic",
    lam: float = DEFAULT_LAMBDA,
    workers: Optional[int] = None,
) -> Tuple[float, ParamGradients]:
    """
    Loss of one render against `ref` and its gradient for every parameter.

    The forward pass is recorded by autograd and differentiated exactly;
    Gaussians removed by the pre-filter receive zero gradients.

    Args:
        scene: Gaussians to differentiate (not modified)
        cam: Viewing camera
        ref: Reference image
        opts: Render options
        projection: "affine" or "conic"
        lam: D-SSIM weight

    Returns:
        (loss value, ParamGradients)
    """
    if not isinstance(scene, GaussianScene):
        scene = GaussianScene.from_gaussians(list(scene))
    params = [p.detach().clone().requires_grad_(True) for p in scene.parameters()]
    live = GaussianScene(*params)

    image = Rasterizer(opts, workers).render(live, cam, projection)
    value = loss(image, ref, lam)

    if value.requires_grad:
        grads = torch.autograd.grad(value, params, allow_unused=True)
    else:
        grads = (None,) * len(params)
    grads = [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)]
    return float(value), ParamGradients(*grads)
