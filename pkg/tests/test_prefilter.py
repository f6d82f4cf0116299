"""Tests for the pre-filter predicates and verdicts."""

import math

import pytest
import torch

from src.core.covariance import build_covariance, to_camera
from src.core.types import DTYPE, Gaussian3D
from src.prefilter.filters import (
    FilterReason,
    FilterVerdict,
    camera_inside,
    filter_reasons,
    frustum_cull,
    min_depth,
    prefilter,
)
from src.projection.conic import cone_matrix, conic_on_unit_plane, ellipsoid_form
from src.projection.splat import ConicKind, Splat2D
from src.utils.errors import InvalidParameterError


def vec(*values):
    return torch.tensor(values, dtype=DTYPE)


def sphere_at(z, sigma, x=0.0):
    return Gaussian3D.create(position=(x, 0.0, z), log_scales=(math.log(sigma),) * 3)


def circle_splat(cx, cy, radius):
    return Splat2D(center=vec(cx, cy), inv_cov=9.0 / radius ** 2 * torch.eye(2, dtype=DTYPE), depth=vec(1.0))


class TestCameraInside:
    def test_small_sphere_outside(self):
        assert not bool(camera_inside(4.0 * torch.eye(3, dtype=DTYPE), vec(0.0, 0.0, 5.0)))

    def test_large_sphere_inside(self):
        assert bool(camera_inside(0.25 * torch.eye(3, dtype=DTYPE), vec(0.0, 0.0, 5.0)))

    def test_boundary_is_inside(self):
        # sigma = 2 at distance 6: level exactly 9
        assert bool(camera_inside(0.25 * torch.eye(3, dtype=DTYPE), vec(0.0, 0.0, 6.0)))

    def test_inside_means_origin_within_unit_level(self, rng, make_ellipsoid):
        for _ in range(200):
            cov, p = make_ellipsoid(rng, z_range=(0.5, 4.0))
            A = torch.linalg.inv(cov)
            unit_level = float(p @ (A / 9.0) @ p) - 1.0
            assert bool(camera_inside(A, p)) == (unit_level <= 0)


class TestMinDepth:
    def test_sphere_cases(self, sphere_cov):
        assert float(min_depth(sphere_cov, vec(0.0, 0.0, 5.0))) == pytest.approx(3.5)
        assert float(min_depth(4.0 * torch.eye(3, dtype=DTYPE), vec(0.0, 0.0, 5.0))) == pytest.approx(-1.0)

    def test_rotated_ellipsoid(self):
        cov = build_covariance(vec(math.cos(math.pi / 8), math.sin(math.pi / 8), 0.0, 0.0), vec(0.0, 0.0, math.log(2.0)))
        # 45 degrees about x mixes the y and z variances: 0.5 * 1 + 0.5 * 4
        z = float(min_depth(cov, vec(0.0, 0.0, 10.0)))
        assert z == pytest.approx(10.0 - 3.0 * math.sqrt(2.5))


class TestFrustumCull:
    def test_centred_splat_kept(self):
        assert not bool(frustum_cull(circle_splat(100.0, 100.0, 31.45), (100.0, 100.0, 200, 200), margin_px=0.0))

    def test_far_splat_culled(self, identity_camera):
        assert bool(frustum_cull(circle_splat(1000.0, 100.0, 30.0), identity_camera, margin_px=16.0))

    def test_edge_straddling_splat_kept(self, identity_camera):
        assert not bool(frustum_cull(circle_splat(229.0, 100.0, 30.0), identity_camera, margin_px=0.0))

    def test_margin_extends_rectangle(self, identity_camera):
        splat = circle_splat(240.0, 100.0, 30.0)
        assert bool(frustum_cull(splat, identity_camera, margin_px=0.0))
        assert not bool(frustum_cull(splat, identity_camera, margin_px=16.0))


class TestPrefilter:
    def test_camera_inside_takes_precedence(self, identity_camera):
        verdict = prefilter(sphere_at(5.0, 2.0), identity_camera)
        assert verdict == FilterVerdict(keep=False, reason=FilterReason.CAMERA_INSIDE)

    def test_centred_sphere_kept(self, identity_camera, sphere):
        verdict = prefilter(sphere, identity_camera)
        assert verdict.keep
        assert verdict.reason is FilterReason.NONE

    def test_close_sphere_on_axis_contains_camera(self, identity_camera):
        # distance 1.4 is inside the 1.5 radius 3-sigma sphere
        assert prefilter(sphere_at(1.4, 0.5), identity_camera).reason is FilterReason.CAMERA_INSIDE

    def test_close_sphere_behind_plane(self, identity_camera):
        verdict = prefilter(sphere_at(1.4, 0.5, x=1.0), identity_camera)
        assert verdict.reason is FilterReason.BEHIND_PLANE

    def test_fully_behind_rejected(self, identity_camera):
        assert prefilter(sphere_at(-5.0, 0.5), identity_camera).reason is FilterReason.BEHIND_PLANE

    def test_off_screen_culled(self, identity_camera):
        assert prefilter(sphere_at(5.0, 0.5, x=50.0), identity_camera).reason is FilterReason.OUT_OF_FRUSTUM

    def test_near_plane_clearance(self, identity_camera, sphere):
        assert prefilter(sphere, identity_camera, near_plane=4.0).reason is FilterReason.BEHIND_PLANE

    @pytest.mark.parametrize("thin_log_scale", [-16.0, -20.0])
    def test_needle_rejected_as_ill_conditioned(self, identity_camera, thin_log_scale):
        needle = Gaussian3D.create(position=(0.0, 0.0, 5.0), rotation=(0.9, 0.3, -0.2, 0.25),
                                   log_scales=(thin_log_scale, -1.0, -1.0))
        assert prefilter(needle, identity_camera).reason is FilterReason.ILL_CONDITIONED

    def test_ill_conditioned_does_not_affect_neighbours(self, identity_camera, sphere):
        needle = Gaussian3D.create(position=(0.0, 0.0, 5.0), rotation=(0.9, 0.3, -0.2, 0.25),
                                   log_scales=(-20.0, -1.0, -1.0))
        behind = sphere_at(-5.0, 0.5)
        gaussians = [sphere, needle, behind]
        cov = build_covariance(torch.stack([g.rotation for g in gaussians]),
                               torch.stack([g.log_scales for g in gaussians]))
        cov_c, p_c = to_camera(cov, torch.stack([g.position for g in gaussians]), identity_camera)
        assert filter_reasons(cov_c, p_c, identity_camera).tolist() == [0, 4, 2]

    def test_moderately_thin_gaussian_kept(self, identity_camera):
        thin = Gaussian3D.create(position=(0.0, 0.0, 5.0), rotation=(0.9, 0.3, -0.2, 0.25),
                                 log_scales=(-8.0, -1.0, -1.0))
        assert prefilter(thin, identity_camera).keep

    def test_verdict_consistency_enforced(self):
        with pytest.raises(InvalidParameterError):
            FilterVerdict(keep=True, reason=FilterReason.BEHIND_PLANE)
        with pytest.raises(InvalidParameterError):
            FilterVerdict(keep=False)

    def test_vectorised_matches_single(self, rng, make_gaussian, identity_camera):
        gaussians = [make_gaussian(rng, depth=rng.uniform(-1.0, 6.0), log_scale_range=(-2.0, 0.5))
                     for _ in range(100)]
        cov = build_covariance(torch.stack([g.rotation for g in gaussians]),
                               torch.stack([g.log_scales for g in gaussians]))
        cov_c, p_c = to_camera(cov, torch.stack([g.position for g in gaussians]), identity_camera)
        codes = filter_reasons(cov_c, p_c, identity_camera)
        for g, code in zip(gaussians, codes):
            assert prefilter(g, identity_camera) == FilterVerdict.from_code(int(code))


def assert_sound(rng, make_ellipsoid, cam, trials):
    kept = straddling = 0
    for _ in range(trials):
        cov, p = make_ellipsoid(rng, z_range=(-2.0, 12.0))
        z_min = float(min_depth(cov, p))
        z_max = float(p[2]) + 3.0 * math.sqrt(float(cov[2, 2]))
        code = int(filter_reasons(cov[None], p[None], cam, margin_px=1e9)[0])
        if code == 1:
            continue
        # the mirrored sheet of a fully-behind ellipsoid also cuts z = 1 in an ellipse
        if z_max <= 0 or abs(z_min) < 1e-3:
            continue

        kind = conic_on_unit_plane(cone_matrix(*ellipsoid_form(cov, p))).kind
        if code == 0:
            assert kind is ConicKind.ELLIPSE
            kept += 1
        else:
            assert code == 2
            assert z_min < 0
            assert kind is ConicKind.HYPERBOLA
            straddling += 1
    assert kept > 100 and straddling > 100


def test_soundness_against_conic_class(rng, make_ellipsoid, identity_camera):
    assert_sound(rng, make_ellipsoid, identity_camera, 3000)


@pytest.mark.slow
def test_soundness_suite(rng, make_ellipsoid, identity_camera):
    assert_sound(rng, make_ellipsoid, identity_camera, 10_000)
