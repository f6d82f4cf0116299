"""Loss, exact backward pass and the fitting loop."""

from src.optim.backward import ParamGradients, backward
from src.optim.fit import FitConfig, FitRecord, fit, scene_extent
from src.optim.metrics import loss, psnr, ssim

__all__ = [
    "FitConfig",
    "FitRecord",
    "ParamGradients",
    "backward",
    "fit",
    "loss",
    "psnr",
    "scene_extent",
    "ssim",
]
