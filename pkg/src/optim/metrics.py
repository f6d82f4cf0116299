"""Photometric image metrics and the training loss."""

import math
from typing import Union

import torch
import torch.nn.functional as F

from src.core.types import DTYPE, Image
from src.utils.errors import DimensionMismatchError, InvalidParameterError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
DEFAULT_LAMBDA = 0.2

ImageLike = Union[Image, torch.Tensor]


def _pixels(img: ImageLike) -> torch.Tensor:
    return img.pixels if isinstance(img, Image) else img


def _matched(img: ImageLike, ref: ImageLike):
    a, b = _pixels(img), _pixels(ref)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Image shape {tuple(a.shape)} does not match reference {tuple(b.shape)}")
    return a, b


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> torch.Tensor:
    coords = torch.arange(size, dtype=DTYPE) - (size - 1) / 2
    g = torch.exp(-(coords ** 2) / (2 * sigma ** 2))
    g = g / g.sum()
    return torch.outer(g, g)


def _filter(x: torch.Tensor, window: torch.Tensor) -> torch.Tensor:
    # x: (1, C, H, W); depthwise convolution with zero padding
    channels = x.shape[1]
    kernel = window.expand(channels, 1, *window.shape)
    return F.conv2d(x, kernel, padding=window.shape[-1] // 2, groups=channels)


def ssim(img: ImageLike, ref: ImageLike) -> torch.Tensor:
    """
    Mean structural similarity over all pixels and channels.

    Uses an 11x11 Gaussian window (sigma 1.5) with zero padding and the
    usual constants for a dynamic range of 1.
    """
    a, b = _matched(img, ref)
    x = a.permute(2, 0, 1).unsqueeze(0)
    y = b.permute(2, 0, 1).unsqueeze(0)
    window = _gaussian_window()

    mu_x = _filter(x, window)
    mu_y = _filter(y, window)
    sigma_x = _filter(x * x, window) - mu_x ** 2
    sigma_y = _filter(y * y, window) - mu_y ** 2
    sigma_xy = _filter(x * y, window) - mu_x * mu_y

    ssim_map = ((2 * mu_x * mu_y + SSIM_C1) * (2 * sigma_xy + SSIM_C2)) / (
        (mu_x ** 2 + mu_y ** 2 + SSIM_C1) * (sigma_x + sigma_y + SSIM_C2)
    )
    return ssim_map.mean()


def psnr(img: ImageLike, ref: ImageLike) -> float:
    """Peak signal-to-noise ratio in dB for values in [0, 1]; identical images give +inf."""
    a, b = _matched(img, ref)
    mse = float(((a.detach() - b.detach()) ** 2).mean())
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def loss(img: ImageLike, ref: ImageLike, lam: float = DEFAULT_LAMBDA) -> torch.Tensor:
    """
    (1 - lam) * L1 + lam * (1 - SSIM).

    Args:
        img: Rendered image (may carry autograd history)
        ref: Reference image
        lam: D-SSIM weight in [0, 1]

    Returns:
        Scalar tensor
    """
    if not 0.0 <= lam <= 1.0:
        raise InvalidParameterError(f"loss lambda must lie in [0, 1], got {lam}")
    a, b = _matched(img, ref)
    l1 = (a - b).abs().mean()
    if lam == 0.0:
        return l1
    return (1.0 - lam) * l1 + lam * (1.0 - ssim(a, b))
