"""Shared fixtures for the conicsplat test suite."""

import sys
from pathlib import Path

import numpy as np
import pytest
import torch

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.assets.generator import reference_sphere
from src.core.covariance import build_covariance
from src.core.types import DTYPE, Camera, Gaussian3D


@pytest.fixture
def identity_camera():
    """200x200 camera with f = 100 at the world origin."""
    return Camera.identity(fx=100.0, fy=100.0, width=200, height=200)


@pytest.fixture
def sphere():
    """White sigma = 0.5 Gaussian at (0, 0, 5)."""
    gaussian, _ = reference_sphere()
    return gaussian


@pytest.fixture
def sphere_cov():
    return 0.25 * torch.eye(3, dtype=DTYPE)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _random_quaternion(rng):
    q = rng.standard_normal(4)
    return q / np.linalg.norm(q)


@pytest.fixture
def make_ellipsoid():
    """
    Factory for random camera-space Gaussians.

    Calling it with an rng returns (cov_c, p_c) with positions inside a
    20-unit frustum and log-scales drawn from [-3, 1].
    """
    def factory(rng, z_range=(2.0, 20.0), log_scale_range=(-3.0, 1.0)):
        z = rng.uniform(*z_range)
        xy = rng.uniform(-0.4, 0.4, size=2) * z
        log_scales = rng.uniform(*log_scale_range, size=3)
        cov = build_covariance(torch.tensor(_random_quaternion(rng), dtype=DTYPE),
                               torch.tensor(log_scales, dtype=DTYPE))
        return cov, torch.tensor([xy[0], xy[1], z], dtype=DTYPE)
    return factory


@pytest.fixture
def make_gaussian():
    """Factory for a random Gaussian3D in front of the identity camera."""
    def factory(rng, depth=5.0, log_scale_range=(-2.5, -1.5), sh_count=1):
        return Gaussian3D.create(
            position=(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), depth),
            rotation=_random_quaternion(rng),
            log_scales=rng.uniform(*log_scale_range, size=3),
            opacity_logit=rng.uniform(-1.0, 2.0),
            sh_coeffs=rng.uniform(-0.5, 0.5, size=(sh_count, 3)),
        )
    return factory
