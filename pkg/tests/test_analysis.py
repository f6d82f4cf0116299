"""Tests for the affine-versus-conic comparison and filter statistics."""

import math

import numpy as np
import pytest
import torch

from src.analysis import (
    COLUMNS,
    angular_radius,
    center_shift,
    compare_cameras,
    compare_scene,
    ellipse_boundary,
    filter_stats,
    hausdorff_distance,
    mean_radius,
)
from src.core.covariance import to_camera
from src.core.types import Camera, Gaussian3D
from src.projection import project_affine, project_conic


def sphere_at(x, z, sigma=0.5):
    return Gaussian3D.create(position=(x, 0.0, z), log_scales=(math.log(sigma),) * 3)


@pytest.fixture
def mixed_scene(sphere):
    # kept, fully behind, camera inside, off screen, straddling z = 0
    return [sphere, sphere_at(0.0, -5.0), sphere_at(0.0, 5.0, 2.0), sphere_at(50.0, 5.0), sphere_at(1.0, 1.4)]


class TestSphereComparison:
    def test_on_axis_sphere(self, sphere_cov, identity_camera):
        p = torch.tensor([0.0, 0.0, 5.0], dtype=sphere_cov.dtype)
        affine = project_affine(sphere_cov, p, identity_camera)
        conic = project_conic(sphere_cov, p, identity_camera)

        assert center_shift(affine, conic) == pytest.approx(0.0, abs=1e-12)
        assert mean_radius(affine) == pytest.approx(30.0, abs=1e-9)
        assert mean_radius(conic) == pytest.approx(300.0 / math.sqrt(91.0), abs=1e-9)
        assert hausdorff_distance(affine, conic) == pytest.approx(300.0 / math.sqrt(91.0) - 30.0, abs=1e-9)
        assert angular_radius(sphere_cov, p) == pytest.approx(0.3)

    def test_boundary_points_on_level_nine(self, sphere, identity_camera):
        cov_c, p_c = to_camera(0.25 * torch.eye(3, dtype=torch.float64), sphere.position, identity_camera)
        conic = project_conic(cov_c, p_c, identity_camera)
        points = torch.tensor(ellipse_boundary(conic, 40), dtype=torch.float64) - conic.center
        levels = ((points @ conic.inv_cov) * points).sum(dim=-1)
        assert levels.numpy() == pytest.approx(np.full(40, 9.0))


class TestCompareScene:
    def test_rows(self, mixed_scene, identity_camera):
        rows = compare_scene(mixed_scene, identity_camera)
        assert [r.index for r in rows] == [0, 1, 2, 3, 4]
        assert [r.reason for r in rows] == ["none", "behind-plane", "camera-inside", "out-of-frustum", "behind-plane"]
        assert [r.verdict for r in rows] == ["keep", "reject", "reject", "reject", "reject"]

        kept = rows[0]
        assert kept.conic_class == "ellipse"
        assert kept.hausdorff_px == pytest.approx(1.4485, abs=1e-4)
        assert kept.conic_radius_px == pytest.approx(31.4485, abs=1e-4)
        assert kept.affine_radius_px == pytest.approx(30.0)

        assert rows[2].conic_class == "undefined"
        assert rows[4].conic_class == "hyperbola"
        assert all(math.isnan(rows[i].hausdorff_px) for i in (1, 2, 3, 4))
        assert rows[0].as_tuple()[:3] == (0, "keep", "none")
        assert len(rows[0].as_tuple()) == len(COLUMNS)

    def test_off_axis_centre_moves_outwards(self, identity_camera):
        (row,) = compare_scene([sphere_at(1.5, 5.0)], identity_camera)
        assert row.verdict == "keep"
        assert row.center_shift_px > 0.1
        assert row.conic_radius_px > row.affine_radius_px

    def test_empty(self, identity_camera):
        assert compare_scene([], identity_camera) == []

    def test_cameras_prefix_ids(self, sphere):
        cams = [Camera.identity(100.0, 100.0, 200, 200, camera_id=7), Camera.identity(50.0, 50.0, 100, 100, camera_id=9)]
        rows = compare_cameras([sphere], cams)
        assert [r[0] for r in rows] == [7, 9]
        assert rows[1][1:4] == (0, "keep", "none")


class TestFilterStats:
    def test_counts_per_camera(self, mixed_scene, identity_camera):
        far = Camera.look_at((0.0, 0.0, -20.0), (0.0, 0.0, 0.0), (0.0, -1.0, 0.0), 100.0, 100.0, 200, 200,
                             camera_id=1)
        stats = filter_stats(mixed_scene, [identity_camera, far])
        assert stats[0] == {"camera": 0, "total": 5, "none": 1, "camera-inside": 1,
                            "behind-plane": 2, "out-of-frustum": 1, "ill-conditioned": 0}
        assert stats[1]["total"] == 5
        assert sum(v for k, v in stats[1].items() if k not in ("camera", "total")) == 5

    def test_empty_scene(self, identity_camera):
        assert filter_stats([], [identity_camera]) == [
            {"camera": 0, "total": 0, "none": 0, "camera-inside": 0, "behind-plane": 0, "out-of-frustum": 0,
             "ill-conditioned": 0}
        ]
