"""Deterministic tiled software rasterizer with front-to-back alpha blending."""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import torch

from src.core.covariance import build_covariance, to_camera
from src.core.sh import eval_sh
from src.core.types import DTYPE, Camera, Gaussian3D, GaussianScene, Image, as_tensor
from src.prefilter.filters import REASON_ORDER, FilterReason, filter_reasons
from src.projection import project
from src.projection.splat import Splat2D, invert_2x2
from src.raster.options import RenderOptions
from src.utils.config import get_config
from src.utils.errors import InvalidParameterError, RenderError
from src.utils.logger import get_logger

logger = get_logger("conicsplat.raster")

THREADS_ENV = "CONIC_SPLAT_THREADS"

SceneLike = Union[GaussianScene, Sequence[Gaussian3D]]


def resolve_workers(workers: Optional[int] = None) -> int:
    """
    Worker count for tile rendering.

    Explicit argument first, then CONIC_SPLAT_THREADS, then
    `processing.workers`; 0 means one per CPU.
    """
    if workers is None:
        env = os.getenv(THREADS_ENV)
        if env not in (None, ""):
            try:
                workers = int(env)
            except ValueError:
                raise InvalidParameterError(f"{THREADS_ENV} must be an integer, got {env!r}")
        else:
            workers = int(get_config().get("processing.workers", 0))
    if workers < 0:
        raise InvalidParameterError(f"Worker count must be >= 0, got {workers}")
    return workers or (os.cpu_count() or 1)


def weight_from_covariance(cov2d: torch.Tensor, center: torch.Tensor, x: torch.Tensor, s: float) -> torch.Tensor:
    """exp(-1/2 (x - c)^T (cov2d + s I)^-1 (x - c)) for unit-variance covariances."""
    dilated = cov2d + s * torch.eye(2, dtype=cov2d.dtype)
    d = as_tensor(x) - center
    conic = invert_2x2(dilated)
    return torch.exp(-0.5 * (d.unsqueeze(-2) @ conic @ d.unsqueeze(-1)).squeeze(-1).squeeze(-1))


def gaussian_weight(splat: Splat2D, x: torch.Tensor, s: float) -> torch.Tensor:
    """
    Screen-space weight of a splat at pixel position x.

    The stored level-9 form inverts to the unit-variance covariance; the
    dilation s I is added before evaluating the Gaussian.
    """
    return weight_from_covariance(splat.cov, splat.center, x, s)


def depth_sort(splats: Union[Splat2D, Sequence[Splat2D]]) -> torch.Tensor:
    """
    Stable near-to-far permutation; equal depths keep ascending source index.

    Args:
        splats: A batched Splat2D or a sequence of single splats

    Returns:
        Long tensor permutation
    """
    if not isinstance(splats, Splat2D):
        splats = Splat2D.stack(list(splats))
    depth = splats.depth.detach().reshape(-1)
    if bool((depth <= 0).any()):
        raise InvalidParameterError("Splat depths must be positive to sort")

    source = splats.source_index
    if not isinstance(source, torch.Tensor) or source.numel() != depth.numel():
        source = torch.arange(depth.numel())
    by_source = torch.sort(source.reshape(-1), stable=True).indices
    by_depth = torch.sort(depth[by_source], stable=True).indices
    return by_source[by_depth]


@dataclass
class RenderResult:
    """Rendered image plus what the pipeline decided along the way."""

    image: Image
    codes: torch.Tensor            # per-Gaussian prefilter codes
    splats: Optional[Splat2D]      # survivors, in scene order
    elapsed: float

    def reason_counts(self) -> dict:
        return {reason.value: int((self.codes == i).sum()) for i, reason in enumerate(REASON_ORDER)}


@dataclass
class _PreparedSplats:
    """Per-survivor quantities shared read-only by all tiles (sorted order)."""

    center: torch.Tensor   # (K, 2)
    conic: torch.Tensor    # (K, 2, 2) inverse of the dilated covariance
    half: torch.Tensor     # (K, 2) half-extents of the evaluation box
    alpha: torch.Tensor    # (K,)
    color: torch.Tensor    # (K, 3)


class Rasterizer:
    """Render Gaussian scenes with either projection."""

    def __init__(self, options: Optional[RenderOptions] = None, workers: Optional[int] = None):
        """
        Initialize rasterizer.

        Args:
            options: Render options (built from config if None)
            workers: Tile worker threads (CONIC_SPLAT_THREADS / config if None)
        """
        self.config = get_config()
        self.options = options or RenderOptions.from_config(self.config)
        self.workers = resolve_workers(workers)

    def render(self, scene: SceneLike, cam: Camera, mode: str = "conic") -> Image:
        """Render `scene` from `cam`; see render_with_info."""
        return self.render_with_info(scene, cam, mode).image

    def render_with_info(self, scene: SceneLike, cam: Camera, mode: str = "conic") -> RenderResult:
        """
        Pre-filter, project, sort and blend.

        Args:
            scene: GaussianScene or list of Gaussian3D (may be empty)
            cam: Viewing camera
            mode: "affine" or "conic"

        Returns:
            RenderResult
        """
        start = time.perf_counter()
        opts = self.options
        if not isinstance(scene, GaussianScene):
            scene = GaussianScene.from_gaussians(list(scene))

        background = torch.tensor(opts.background, dtype=DTYPE)
        if len(scene) == 0:
            image = Image.filled(cam.width, cam.height, background)
            return RenderResult(image, torch.zeros(0, dtype=torch.long), None, time.perf_counter() - start)

        cov = build_covariance(scene.rotations, scene.log_scales)
        cov_c, p_c = to_camera(cov, scene.positions, cam)
        codes = filter_reasons(cov_c, p_c, cam, opts.margin_px, opts.near_plane)
        keep = torch.nonzero(codes == 0).reshape(-1)
        ill = torch.nonzero(codes == REASON_ORDER.index(FilterReason.ILL_CONDITIONED)).reshape(-1)
        if ill.numel():
            logger.warning(f"Skipping {ill.numel()} ill-conditioned Gaussian(s), first index {int(ill[0])}")

        splats = None
        if keep.numel() == 0:
            pixels = background.reshape(1, 1, 3).expand(cam.height, cam.width, 3).clone()
        else:
            splats = project(mode, cov_c[keep], p_c[keep], cam, source_index=keep)
            prepared = self._prepare(scene, cam, keep, splats)
            pixels = self._blend(prepared, cam, background)

        elapsed = time.perf_counter() - start
        result = RenderResult(Image.from_tensor(pixels), codes, splats, elapsed)
        logger.debug(
            f"Camera {cam.camera_id} ({mode}): {keep.numel()}/{len(scene)} kept "
            f"{result.reason_counts()} in {elapsed * 1000:.1f} ms"
        )
        return result

    def _prepare(self, scene: GaussianScene, cam: Camera, keep: torch.Tensor, splats: Splat2D) -> _PreparedSplats:
        """Colours, opacities and dilated conics of the survivors, in depth order."""
        opts = self.options
        if opts.sh_degree > scene.sh_degree:
            raise InvalidParameterError(
                f"Render asks for SH degree {opts.sh_degree}, scene stores degree {scene.sh_degree}"
            )

        dirs = scene.positions[keep] - cam.center
        dirs = dirs / dirs.norm(dim=-1, keepdim=True)
        color = eval_sh(scene.sh_coeffs[keep], dirs, opts.sh_degree)
        alpha = torch.sigmoid(scene.opacity_logits[keep])

        dilated = splats.cov + opts.dilation_s * torch.eye(2, dtype=DTYPE)
        conic = invert_2x2(dilated)
        half = 3.0 * torch.sqrt(torch.diagonal(dilated, dim1=-2, dim2=-1))

        order = depth_sort(splats)
        prepared = _PreparedSplats(splats.center[order], conic[order], half[order], alpha[order], color[order])

        with torch.no_grad():
            finite = (
                torch.isfinite(prepared.center).all(dim=-1)
                & torch.isfinite(prepared.conic).flatten(1).all(dim=-1)
                & torch.isfinite(prepared.half).all(dim=-1)
                & torch.isfinite(prepared.color).all(dim=-1)
                & torch.isfinite(prepared.alpha)
            )
            if not bool(finite.all()):
                bad = int(keep[order][~finite][0])
                raise RenderError(f"Gaussian {bad} produced non-finite splat parameters", gaussian_index=bad)
        return prepared

    def _tiles(self, cam: Camera) -> List[Tuple[int, int, int, int]]:
        size = self.options.tile_size
        return [
            (x0, min(x0 + size, cam.width), y0, min(y0 + size, cam.height))
            for y0 in range(0, cam.height, size)
            for x0 in range(0, cam.width, size)
        ]

    def _blend(self, prepared: _PreparedSplats, cam: Camera, background: torch.Tensor) -> torch.Tensor:
        """Blend every tile and stitch the rows back together."""
        tiles = self._tiles(cam)

        with torch.no_grad():
            lo = prepared.center - prepared.half
            hi = prepared.center + prepared.half

        def work(tile):
            return self._blend_tile(tile, prepared, lo, hi, background)

        if self.workers == 1 or len(tiles) == 1:
            blocks = [work(t) for t in tiles]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                blocks = list(pool.map(work, tiles))

        per_row = -(-cam.width // self.options.tile_size)
        rows = [torch.cat(blocks[i:i + per_row], dim=1) for i in range(0, len(blocks), per_row)]
        pixels = torch.cat(rows, dim=0)

        if not bool(torch.isfinite(pixels.detach()).all()):
            raise RenderError("Accumulated colour is not finite")
        return pixels

    def _blend_tile(
        self,
        tile: Tuple[int, int, int, int],
        prepared: _PreparedSplats,
        lo: torch.Tensor,
        hi: torch.Tensor,
        background: torch.Tensor,
    ) -> torch.Tensor:
        """
        Front-to-back compositing of one tile.

        C = sum_k T_k a_k c_k + T_final * background with a_k = alpha_k G_k,
        T_k = prod_{j<k} (1 - a_j). Contributions with a_k below the cutoff
        are skipped; a pixel stops after the splat that drops T below the
        floor.
        """
        x0, x1, y0, y1 = tile
        opts = self.options
        h, w = y1 - y0, x1 - x0

        # Pixel centres sit at integer + 0.5
        xs = torch.arange(x0, x1, dtype=DTYPE) + 0.5
        ys = torch.arange(y0, y1, dtype=DTYPE) + 0.5

        overlap = (lo[:, 0] <= xs[-1]) & (hi[:, 0] >= xs[0]) & (lo[:, 1] <= ys[-1]) & (hi[:, 1] >= ys[0])
        idx = torch.nonzero(overlap).reshape(-1)
        if idx.numel() == 0:
            return background.reshape(1, 1, 3).expand(h, w, 3).clone()

        gy, gx = torch.meshgrid(ys, xs, indexing="ij")
        dx = gx.reshape(1, -1) - prepared.center[idx, 0:1]
        dy = gy.reshape(1, -1) - prepared.center[idx, 1:2]

        conic = prepared.conic[idx]
        power = -0.5 * (conic[:, 0, 0:1] * dx * dx + 2.0 * conic[:, 0, 1:2] * dx * dy + conic[:, 1, 1:2] * dy * dy)
        half = prepared.half[idx]
        in_box = (dx.abs() <= half[:, 0:1]) & (dy.abs() <= half[:, 1:2])
        weight = torch.where(in_box, torch.exp(power), torch.zeros_like(power))

        alpha = prepared.alpha[idx].unsqueeze(-1) * weight
        alpha = torch.where(alpha >= opts.alpha_cutoff, alpha, torch.zeros_like(alpha))

        keep_frac = 1.0 - alpha
        t_incl = torch.cumprod(keep_frac, dim=0)
        t_excl = torch.cat([torch.ones_like(t_incl[:1]), t_incl[:-1]], dim=0)
        live = t_excl >= opts.transmittance_floor

        contrib = torch.where(live, t_excl * alpha, torch.zeros_like(alpha))
        t_final = torch.where(live, keep_frac, torch.ones_like(keep_frac)).prod(dim=0)

        rgb = contrib.transpose(0, 1) @ prepared.color[idx] + t_final.unsqueeze(-1) * background
        return rgb.reshape(h, w, 3)


def render(
    scene: SceneLike,
    cam: Camera,
    opts: Optional[RenderOptions] = None,
    projection: str = "conic",
    workers: Optional[int] = None,
) -> Image:
    """
    Render a scene to an image.

    Args:
        scene: Gaussians (may be empty, giving the background)
        cam: Viewing camera
        opts: Render options (config defaults if None)
        projection: "affine" or "conic"
        workers: Tile worker threads

    Returns:
        Image
    """
    return Rasterizer(opts, workers).render(scene, cam, projection)
