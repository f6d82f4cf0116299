"""Desk-scale gradient-descent fitting of Gaussian parameters to reference images."""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import torch
from pydantic import BaseModel, ConfigDict, Field, field_validator
from tqdm import tqdm

from src.core.types import Camera, GaussianScene, Image
from src.optim.metrics import DEFAULT_LAMBDA, loss, psnr
from src.raster.options import RenderOptions
from src.raster.rasterizer import Rasterizer, SceneLike
from src.projection import PROJECTION_MODES
from src.utils.config import Config, get_config
from src.utils.errors import DimensionMismatchError, FitDivergenceError, InvalidParameterError, RenderError
from src.utils.logger import get_logger

logger = get_logger("conicsplat.fit")


class FitConfig(BaseModel):
    """Optimiser settings."""

    model_config = ConfigDict(frozen=True)

    iterations: int = Field(500, ge=1)
    lr_position: float = Field(2e-4, gt=0.0, description="Multiplied by the scene extent")
    lr_rotation: float = Field(1e-3, gt=0.0)
    lr_log_scales: float = Field(5e-3, gt=0.0)
    lr_opacity: float = Field(5e-2, gt=0.0)
    lr_sh: float = Field(2.5e-3, gt=0.0)
    loss_lambda: float = Field(DEFAULT_LAMBDA, ge=0.0, le=1.0)
    seed: int = 0
    cameras_per_step: Optional[int] = Field(None, ge=1, description="None renders every camera each step")
    projection: str = "conic"
    progress: bool = True

    @field_validator("projection")
    @classmethod
    def _known_projection(cls, value: str) -> str:
        if value not in PROJECTION_MODES:
            raise ValueError(f"projection must be one of {PROJECTION_MODES}")
        return value

    @classmethod
    def from_config(cls, config: Optional[Config] = None, **overrides) -> "FitConfig":
        """Build from the `fit` config section; explicit overrides win."""
        config = config or get_config()
        values = {k: v for k, v in (config.fit or {}).items() if k in cls.model_fields and v is not None}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class FitRecord:
    """One row of the loss history."""

    iteration: int
    loss: float
    psnr: float


def scene_extent(cameras: Sequence[Camera]) -> float:
    """Radius of the camera centres around their mean, padded by 10%; 1.0 for a single camera."""
    centers = torch.stack([cam.center for cam in cameras])
    radius = float((centers - centers.mean(dim=0)).norm(dim=-1).max()) * 1.1
    return radius if radius > 0 else 1.0


def fit(
    scene0: SceneLike,
    cameras: Sequence[Camera],
    refs: Sequence[Image],
    cfg: Optional[FitConfig] = None,
    opts: Optional[RenderOptions] = None,
    workers: Optional[int] = None,
) -> Tuple[GaussianScene, List[FitRecord]]:
    """
    Fit Gaussian parameters to reference images with Adam.

    Every parameter group gets its own learning rate; betas are
    (0.9, 0.999) and eps 1e-15. The loss of a step is the mean over the
    cameras rendered in that step.

    Args:
        scene0: Initial Gaussians (not modified)
        cameras: Viewing cameras
        refs: One reference image per camera
        cfg: Optimiser settings (config defaults if None)
        opts: Render options
        workers: Tile worker threads

    Returns:
        (fitted scene, loss history)

    Raises:
        FitDivergenceError: if the loss becomes non-finite
    """
    cfg = cfg or FitConfig.from_config()
    if not cameras:
        raise InvalidParameterError("fit needs at least one camera/reference pair")
    if len(cameras) != len(refs):
        raise DimensionMismatchError(f"{len(cameras)} cameras but {len(refs)} reference images")

    if not isinstance(scene0, GaussianScene):
        scene0 = GaussianScene.from_gaussians(list(scene0))
    scene = GaussianScene(*(p.requires_grad_(True) for p in scene0.clone().parameters()))

    extent = scene_extent(cameras)
    optimizer = torch.optim.Adam(
        [
            {"params": [scene.positions], "lr": cfg.lr_position * extent, "name": "positions"},
            {"params": [scene.rotations], "lr": cfg.lr_rotation, "name": "rotations"},
            {"params": [scene.log_scales], "lr": cfg.lr_log_scales, "name": "log_scales"},
            {"params": [scene.opacity_logits], "lr": cfg.lr_opacity, "name": "opacity"},
            {"params": [scene.sh_coeffs], "lr": cfg.lr_sh, "name": "sh"},
        ],
        lr=0.0,
        betas=(0.9, 0.999),
        eps=1e-15,
    )

    rasterizer = Rasterizer(opts, workers)
    generator = torch.Generator().manual_seed(cfg.seed)
    per_step = min(cfg.cameras_per_step or len(cameras), len(cameras))
    history: List[FitRecord] = []

    logger.info(
        f"Fitting {len(scene)} Gaussians to {len(cameras)} views "
        f"({cfg.projection}, {cfg.iterations} iterations, extent {extent:.3g})"
    )

    progress = tqdm(range(cfg.iterations), desc="Fitting", disable=not cfg.progress)
    for iteration in progress:
        if per_step < len(cameras):
            views = sorted(torch.randperm(len(cameras), generator=generator)[:per_step].tolist())
        else:
            views = list(range(len(cameras)))

        optimizer.zero_grad(set_to_none=True)
        try:
            total = 0.0
            psnrs = []
            for i in views:
                image = rasterizer.render(scene, cameras[i], cfg.projection)
                total = total + loss(image, refs[i], cfg.loss_lambda)
                psnrs.append(psnr(image, refs[i]))
        except RenderError as e:
            raise FitDivergenceError(f"Render failed at iteration {iteration}: {e}", iteration) from e

        total = total / len(views)
        value = float(total)
        if not math.isfinite(value):
            raise FitDivergenceError(f"Loss became non-finite at iteration {iteration}", iteration)

        if isinstance(total, torch.Tensor) and total.requires_grad:
            total.backward()
            optimizer.step()

        record = FitRecord(iteration, value, sum(psnrs) / len(psnrs))
        history.append(record)
        progress.set_postfix(loss=f"{value:.5f}", psnr=f"{record.psnr:.2f}")

    logger.info(f"Fit finished: loss {history[-1].loss:.6g}, PSNR {history[-1].psnr:.2f} dB")
    return scene.detach(), history
