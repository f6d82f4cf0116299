"""Reproducible synthetic scenes and camera rigs."""

import math
from typing import List, Optional, Tuple

import numpy as np

from src.core.sh import SH_C0
from src.core.types import Camera, Gaussian3D
from src.utils.config import get_config
from src.utils.errors import InvalidParameterError
from src.utils.logger import get_logger

logger = get_logger("conicsplat.synth")

PRESETS = ("sphere-grid", "random")


def rgb_to_sh_dc(rgb) -> np.ndarray:
    """Degree-0 coefficient giving colour `rgb` (the renderer adds 0.5 back)."""
    return (np.asarray(rgb, dtype=np.float64) - 0.5) / SH_C0


def reference_sphere(opacity_logit: float = 12.0) -> Tuple[Gaussian3D, Camera]:
    """
    White isotropic Gaussian with sigma 0.5 at (0, 0, 5), seen by a 200x200 camera with f = 100.

    Its exact silhouette has radius 31.4485 px; the affine one 30 px.
    """
    sphere = Gaussian3D.create(
        position=(0.0, 0.0, 5.0),
        log_scales=(math.log(0.5),) * 3,
        opacity_logit=opacity_logit,
        sh_coeffs=rgb_to_sh_dc((1.0, 1.0, 1.0)).reshape(1, 3),
    )
    return sphere, Camera.identity(fx=100.0, fy=100.0, width=200, height=200)


class SceneGenerator:
    """Seeded generator of Gaussian scenes and orbiting cameras."""

    def __init__(self, seed: Optional[int] = None):
        """
        Initialize generator.

        Args:
            seed: RNG seed (config `synth.seed` if None)
        """
        self.config = get_config()
        self.seed = int(self.config.get("synth.seed", 0)) if seed is None else seed
        self.rng = np.random.default_rng(self.seed)

    def generate(self, n: int, preset: str = "sphere-grid") -> List[Gaussian3D]:
        """
        Generate n Gaussians around the world origin.

        Args:
            n: Number of Gaussians
            preset: "sphere-grid" (isotropic, on a cubic lattice) or
                "random" (anisotropic, random pose)

        Returns:
            List of Gaussian3D
        """
        if n < 0:
            raise InvalidParameterError(f"Gaussian count must be >= 0, got {n}")
        if preset == "sphere-grid":
            gaussians = self._sphere_grid(n)
        elif preset == "random":
            gaussians = self._random(n)
        else:
            raise InvalidParameterError(f"Unknown preset {preset!r} (expected one of {PRESETS})")

        logger.info(f"Generated {len(gaussians)} Gaussians ({preset}, seed {self.seed})")
        return gaussians

    def _colour(self) -> np.ndarray:
        return rgb_to_sh_dc(self.rng.uniform(0.1, 0.9, size=3)).reshape(1, 3)

    def _sphere_grid(self, n: int) -> List[Gaussian3D]:
        extent = float(self.config.get("synth.extent", 1.0))
        side = max(1, math.ceil(round(n ** (1.0 / 3.0), 9)))
        spacing = 2.0 * extent / side
        sigma = spacing * float(self.config.get("synth.grid_sigma_fraction", 0.25))

        gaussians = []
        for index in range(n):
            i, j, k = index % side, (index // side) % side, index // (side * side)
            position = (np.array([i, j, k]) + 0.5) * spacing - extent
            gaussians.append(Gaussian3D.create(
                position=position,
                log_scales=(math.log(sigma),) * 3,
                opacity_logit=self.rng.uniform(1.0, 3.0),
                sh_coeffs=self._colour(),
            ))
        return gaussians

    def _random(self, n: int) -> List[Gaussian3D]:
        extent = float(self.config.get("synth.extent", 1.0))
        low, high = self.config.get("synth.log_scale_range", [-3.5, -2.0])

        gaussians = []
        for _ in range(n):
            quaternion = self.rng.standard_normal(4)
            gaussians.append(Gaussian3D.create(
                position=self.rng.uniform(-extent, extent, size=3),
                rotation=quaternion / np.linalg.norm(quaternion),
                log_scales=self.rng.uniform(low, high, size=3),
                opacity_logit=self.rng.uniform(0.0, 3.0),
                sh_coeffs=self._colour(),
            ))
        return gaussians

    def orbit_cameras(
        self,
        count: int,
        radius: Optional[float] = None,
        width: Optional[int] = None,
        height: Optional[int] = None,
        fov: Optional[float] = None,
    ) -> List[Camera]:
        """
        Cameras evenly spaced on a raised circle, all looking at the origin.

        Args:
            count: Number of cameras
            radius: Orbit radius (config `synth.camera_radius`)
            width: Image width (config `synth.width`)
            height: Image height (config `synth.height`)
            fov: Horizontal field of view in degrees (config `synth.fov`)

        Returns:
            List of Camera with ids 0..count-1
        """
        radius = radius or float(self.config.get("synth.camera_radius", 4.0))
        width = width or int(self.config.get("synth.width", 128))
        height = height or int(self.config.get("synth.height", 128))
        fov = fov or float(self.config.get("synth.fov", 50.0))
        focal = width / (2.0 * math.tan(math.radians(fov) / 2.0))

        cameras = []
        for i in range(count):
            angle = 2.0 * math.pi * i / max(count, 1)
            eye = (radius * math.sin(angle), 0.3 * radius, -radius * math.cos(angle))
            cameras.append(Camera.look_at(
                eye=eye, target=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0),
                fx=focal, fy=focal, width=width, height=height, camera_id=i,
            ))
        return cameras
