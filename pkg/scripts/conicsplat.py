#!/usr/bin/env python3
"""Command-line interface for conicsplat."""

import sys
from pathlib import Path
from typing import List, Optional, Sequence

import click
import torch
from dotenv import load_dotenv

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

# Load environment variables (CONIC_SPLAT_THREADS)
load_dotenv(project_root / ".env")

from src.analysis.compare import COLUMNS, compare_cameras
from src.analysis.stats import filter_stats
from src.assets.generator import PRESETS, SceneGenerator
from src.core.covariance import build_covariance, to_camera
from src.core.types import Camera, Gaussian3D, GaussianScene
from src.formats.cameras import read_cameras, write_cameras
from src.formats.export import Exporter, format_cell
from src.formats.ply import read_ply, write_ply
from src.optim.fit import FitConfig, fit
from src.prefilter.filters import REASON_ORDER, filter_reasons
from src.projection import PROJECTION_MODES, project
from src.raster.options import RenderOptions
from src.raster.rasterizer import Rasterizer
from src.utils.config import get_config
from src.utils.errors import ConicSplatError
from src.utils.logger import get_logger, setup_logger

logger = get_logger("conicsplat.cli")

PROJECT_COLUMNS = ("camera", "index", "verdict", "reason", "x_px", "y_px",
                   "inv_cov_00", "inv_cov_01", "inv_cov_11", "depth")

# ValueError covers pydantic validation of config values
COMMAND_ERRORS = (ConicSplatError, OSError, ValueError)


def _fail(error: Exception, action: str):
    logger.error(f"{action} failed: {error}")
    click.echo(f"Error: {error}", err=True)
    sys.exit(1)


def _load_cloud(path: str) -> List[Gaussian3D]:
    gaussians = read_ply(Path(path).read_bytes())
    logger.info(f"Loaded {len(gaussians)} Gaussians from {path}")
    return gaussians


def _load_cameras(path: str) -> List[Camera]:
    cameras = read_cameras(Path(path).read_bytes())
    logger.info(f"Loaded {len(cameras)} cameras from {path}")
    return cameras


def _mode_option(func):
    return click.option("--mode", type=click.Choice(PROJECTION_MODES), default=None,
                        help="Projection (default: config projection.mode)")(func)


def _mode(mode: Optional[str]) -> str:
    return mode or get_config().get("projection.mode", "conic")


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Path to config.yaml")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"]), default=None,
              help="Console log level (default: config logging.level)")
def cli(config_path, log_level):
    """conicsplat: Gaussian splatting with exact tangent-cone projection."""
    config = get_config(config_path)
    setup_logger(
        name="conicsplat",
        level=log_level or config.get("logging.level", "INFO"),
        log_file=config.get("logging.file"),
        console=True,
    )


@cli.command()
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output PLY cloud")
@click.option("--cameras", required=True, type=click.Path(dir_okay=False), help="Output camera file")
@click.option("--n", "count", required=True, type=click.IntRange(min=0), help="Number of Gaussians")
@click.option("--seed", required=True, type=int, help="RNG seed")
@click.option("--preset", type=click.Choice(PRESETS), default="sphere-grid", help="Scene layout")
def synth(out, cameras, count, seed, preset):
    """Write a reproducible synthetic scene and orbiting cameras."""
    try:
        generator = SceneGenerator(seed)
        gaussians = generator.generate(count, preset)
        rig = generator.orbit_cameras(int(get_config().get("synth.cameras", 3)))

        for path in (Path(out), Path(cameras)):
            path.parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_bytes(write_ply(gaussians))
        Path(cameras).write_text(write_cameras(rig))
        click.echo(f"Wrote {len(gaussians)} Gaussians to {out} and {len(rig)} cameras to {cameras}")
    except COMMAND_ERRORS as e:
        _fail(e, "synth")


def _project_rows(scene: GaussianScene, cameras: Sequence[Camera], mode: str, margin: float):
    nan = float("nan")
    with torch.no_grad():
        cov = build_covariance(scene.rotations, scene.log_scales)
        for cam in cameras:
            cov_c, p_c = to_camera(cov, scene.positions, cam)
            codes = filter_reasons(cov_c, p_c, cam, margin)
            for i in range(len(scene)):
                code = int(codes[i])
                if code != 0:
                    yield (cam.camera_id, i, "reject", REASON_ORDER[code].value) + (nan,) * 6
                    continue
                splat = project(mode, cov_c[i], p_c[i], cam, source_index=i)
                inv = splat.inv_cov
                yield (cam.camera_id, i, "keep", REASON_ORDER[0].value,
                       float(splat.center[0]), float(splat.center[1]),
                       float(inv[0, 0]), float(inv[0, 1]), float(inv[1, 1]), float(splat.depth))


@cli.command("project")
@click.option("--cloud", required=True, type=click.Path(exists=True, dir_okay=False), help="Input PLY cloud")
@click.option("--cameras", required=True, type=click.Path(exists=True, dir_okay=False), help="Camera file")
@_mode_option
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output CSV")
def project_cmd(cloud, cameras, mode, out):
    """Per-Gaussian verdicts and projected splats as CSV."""
    try:
        scene = GaussianScene.from_gaussians(_load_cloud(cloud))
        rig = _load_cameras(cameras)
        margin = RenderOptions.from_config().margin_px
        rows = list(_project_rows(scene, rig, _mode(mode), margin)) if len(scene) else []
        Exporter().export_csv(rows, PROJECT_COLUMNS, out)
        click.echo(f"Wrote {len(rows)} rows to {out}")
    except COMMAND_ERRORS as e:
        _fail(e, "project")


@cli.command()
@click.option("--cloud", required=True, type=click.Path(exists=True, dir_okay=False), help="Input PLY cloud")
@click.option("--cameras", required=True, type=click.Path(exists=True, dir_okay=False), help="Camera file")
@_mode_option
@click.option("--out-dir", required=True, type=click.Path(file_okay=False), help="Directory for PPM images")
@click.option("--s", "dilation", type=click.FloatRange(min=0.0), default=None,
              help="Dilation in px^2 (default: config render.dilation_s)")
def render(cloud, cameras, mode, out_dir, dilation):
    """Render one PPM image per camera."""
    try:
        gaussians = _load_cloud(cloud)
        rig = _load_cameras(cameras)
        rasterizer = Rasterizer(RenderOptions.from_config(dilation_s=dilation))
        exporter = Exporter()
        for cam in rig:
            result = rasterizer.render_with_info(gaussians, cam, _mode(mode))
            exporter.export_image(result.image, Path(out_dir) / f"view_{cam.camera_id:03d}.ppm")
            logger.info(f"Camera {cam.camera_id}: {result.reason_counts()} in {result.elapsed:.3f} s")
        click.echo(f"Rendered {len(rig)} images to {out_dir}")
    except COMMAND_ERRORS as e:
        _fail(e, "render")


@cli.command()
@click.option("--cloud", required=True, type=click.Path(exists=True, dir_okay=False), help="Input PLY cloud")
@click.option("--cameras", required=True, type=click.Path(exists=True, dir_okay=False), help="Camera file")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output CSV")
def compare(cloud, cameras, out):
    """Centre shift and silhouette Hausdorff distance between the two projections."""
    try:
        rows = compare_cameras(_load_cloud(cloud), _load_cameras(cameras))
        Exporter().export_csv(rows, ("camera",) + COLUMNS, out)
        click.echo(f"Wrote {len(rows)} rows to {out}")
    except COMMAND_ERRORS as e:
        _fail(e, "compare")


@cli.command("filter-stats")
@click.option("--cloud", required=True, type=click.Path(exists=True, dir_okay=False), help="Input PLY cloud")
@click.option("--cameras", required=True, type=click.Path(exists=True, dir_okay=False), help="Camera file")
def filter_stats_cmd(cloud, cameras):
    """Count pre-filter outcomes per camera (CSV on stdout)."""
    try:
        stats = filter_stats(_load_cloud(cloud), _load_cameras(cameras),
                             RenderOptions.from_config().margin_px)
        header = ["camera", "total"] + [reason.value for reason in REASON_ORDER]
        click.echo(",".join(header))
        for counts in stats:
            click.echo(",".join(str(counts[key]) for key in header))
    except COMMAND_ERRORS as e:
        _fail(e, "filter-stats")


@cli.command("fit")
@click.option("--target-cloud", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Cloud rendered to make the reference images")
@click.option("--init-cloud", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Starting cloud")
@click.option("--cameras", required=True, type=click.Path(exists=True, dir_okay=False), help="Camera file")
@click.option("--iters", type=click.IntRange(min=1), default=None, help="Iterations (default: config fit.iterations)")
@_mode_option
@click.option("--out-cloud", required=True, type=click.Path(dir_okay=False), help="Fitted PLY cloud")
@click.option("--history", required=True, type=click.Path(dir_okay=False), help="Loss history CSV")
def fit_cmd(target_cloud, init_cloud, cameras, iters, mode, out_cloud, history):
    """Fit a cloud to images rendered from a target cloud."""
    try:
        mode = _mode(mode)
        rig = _load_cameras(cameras)
        target = _load_cloud(target_cloud)
        rasterizer = Rasterizer()
        with torch.no_grad():
            refs = [rasterizer.render(target, cam, mode) for cam in rig]

        cfg = FitConfig.from_config(iterations=iters, projection=mode)
        fitted, records = fit(_load_cloud(init_cloud), rig, refs, cfg, rasterizer.options)

        Path(out_cloud).parent.mkdir(parents=True, exist_ok=True)
        Path(out_cloud).write_bytes(write_ply(fitted.to_gaussians()))
        Exporter().export_csv(((r.iteration, r.loss, r.psnr) for r in records),
                              ("iteration", "loss", "psnr"), history)
        click.echo(f"Final loss {format_cell(records[-1].loss)}, PSNR {records[-1].psnr:.2f} dB")
    except COMMAND_ERRORS as e:
        _fail(e, "fit")


def run(args: Optional[Sequence[str]] = None) -> int:
    """
    Run the CLI and return its exit code instead of exiting.

    Args:
        args: Argument list (sys.argv[1:] if None)

    Returns:
        0 on success, 2 for usage errors, 1 for any other failure
    """
    try:
        result = cli.main(args=list(args) if args is not None else None, prog_name="conicsplat",
                          standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        return 1
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    except Exception as e:
        logger.debug("Unhandled error", exc_info=True)
        click.echo(f"Error: {type(e).__name__}: {e}", err=True)
        return 1
    # --help and friends come back as an exit code
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(run())
