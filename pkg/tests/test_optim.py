"""Tests for metrics, the exact backward pass and the fitting loop."""

import math

import numpy as np
import pytest
import torch
from pydantic import ValidationError
from scipy import ndimage

from src.assets.generator import SceneGenerator, rgb_to_sh_dc
from src.core.types import DTYPE, Camera, Gaussian3D, GaussianScene, Image
from src.optim import FitConfig, backward, fit, loss, psnr, scene_extent, ssim
from src.oracle import fd_gradient
from src.raster import Rasterizer, RenderOptions
from src.utils.errors import DimensionMismatchError, FitDivergenceError, InvalidParameterError

# Smooth settings: no cutoff, and every splat's box covers the whole 16x16 image
SMOOTH = RenderOptions(alpha_cutoff=0.0)


@pytest.fixture
def tiny_camera():
    return Camera.identity(fx=16.0, fy=16.0, width=16, height=16)


def random_image(rng, width=16, height=16):
    return Image.from_tensor(torch.tensor(rng.uniform(0.0, 1.0, size=(height, width, 3)), dtype=DTYPE))


def broad_gaussian(rng, depth, sigma_range):
    q = rng.standard_normal(4)
    return Gaussian3D.create(
        position=(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), depth),
        rotation=q / np.linalg.norm(q),
        log_scales=np.log(rng.uniform(*sigma_range, size=3)),
        opacity_logit=rng.uniform(-0.5, 1.0),
        sh_coeffs=rgb_to_sh_dc(rng.uniform(0.2, 0.8, size=3)),
    )


def flatten(scene):
    return np.concatenate([p.detach().numpy().reshape(-1) for p in scene.parameters()])


def unflatten(x, like):
    parts, offset = [], 0
    for p in like.parameters():
        n = p.numel()
        parts.append(torch.tensor(x[offset:offset + n], dtype=DTYPE).reshape(p.shape))
        offset += n
    return GaussianScene(*parts)


def flat_gradients(grads):
    return np.concatenate([t.numpy().reshape(-1) for t in
                           (grads.d_position, grads.d_rotation, grads.d_log_scales,
                            grads.d_opacity_logit, grads.d_sh)])


def assert_matches_finite_differences(rng, gaussians, cam, mode):
    scene = GaussianScene.from_gaussians(gaussians)
    rasterizer = Rasterizer(SMOOTH, workers=1)
    # keep every pixel well away from the L1 kink
    base = rasterizer.render(scene, cam, mode).pixels
    offset = rng.choice([-1.0, 1.0], size=base.shape) * rng.uniform(0.1, 0.5, size=base.shape)
    ref = Image.from_tensor(base + torch.tensor(offset, dtype=DTYPE))

    def objective(x):
        with torch.no_grad():
            return float(loss(rasterizer.render(unflatten(x, scene), cam, mode), ref))

    _, grads = backward(scene, cam, ref, SMOOTH, projection=mode, workers=1)
    analytic = flat_gradients(grads)
    numeric = fd_gradient(objective, flatten(scene), step=1e-5)
    assert np.all(np.abs(analytic - numeric) <= 1e-3 * np.abs(numeric) + 1e-6)


class TestMetrics:
    def test_psnr_identical_is_infinite(self, rng):
        img = random_image(rng)
        assert psnr(img, img) == math.inf

    def test_psnr_constant_offset(self):
        a = Image.filled(8, 8, (0.5, 0.5, 0.5))
        b = Image.filled(8, 8, (0.6, 0.6, 0.6))
        assert psnr(a, b) == pytest.approx(20.0)

    def test_loss_pure_l1(self):
        black = Image.filled(16, 16)
        white = Image.filled(16, 16, (1.0, 1.0, 1.0))
        assert float(loss(black, white, lam=0.0)) == pytest.approx(1.0)

    def test_loss_pure_dssim(self, rng):
        a, b = random_image(rng), random_image(rng)
        assert float(loss(a, b, lam=1.0)) == pytest.approx(1.0 - float(ssim(a, b)))

    def test_identical_images(self, rng):
        img = random_image(rng)
        assert float(ssim(img, img)) == pytest.approx(1.0)
        assert float(loss(img, img)) == pytest.approx(0.0, abs=1e-12)

    def test_ssim_matches_reference_filtering(self, rng):
        a, b = random_image(rng, 20, 14), random_image(rng, 20, 14)
        coords = np.arange(11) - 5.0
        g = np.exp(-coords ** 2 / (2 * 1.5 ** 2))
        window = np.outer(g, g) / g.sum() ** 2

        def blur(x):
            return ndimage.correlate(x, window, mode="constant", cval=0.0)

        values = []
        for c in range(3):
            x, y = a.pixels[..., c].numpy(), b.pixels[..., c].numpy()
            mx, my = blur(x), blur(y)
            vx, vy, cxy = blur(x * x) - mx ** 2, blur(y * y) - my ** 2, blur(x * y) - mx * my
            c1, c2 = 0.01 ** 2, 0.03 ** 2
            values.append(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2)))
        assert float(ssim(a, b)) == pytest.approx(float(np.mean(values)), abs=1e-12)

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            loss(random_image(rng, 16, 16), random_image(rng, 16, 8))
        with pytest.raises(DimensionMismatchError):
            psnr(random_image(rng, 16, 16), random_image(rng, 8, 16))

    def test_lambda_range(self, rng):
        img = random_image(rng)
        with pytest.raises(InvalidParameterError):
            loss(img, img, lam=1.5)


class TestBackward:
    def test_zero_at_reference(self, rng, tiny_camera):
        scene = GaussianScene.from_gaussians([broad_gaussian(rng, 3.0, (0.55, 0.6))])
        ref = Rasterizer(SMOOTH, workers=1).render(scene, tiny_camera)
        value, grads = backward(scene, tiny_camera, ref, SMOOTH, lam=0.0, workers=1)
        assert value == 0.0
        assert np.abs(flat_gradients(grads)).max() < 1e-10

    def test_shapes_and_finiteness(self, rng, tiny_camera):
        scene = GaussianScene.from_gaussians([broad_gaussian(rng, 3.0, (0.55, 0.6)) for _ in range(3)])
        _, grads = backward(scene, tiny_camera, random_image(rng), SMOOTH, workers=1)
        assert grads.is_finite()
        assert grads.d_position.shape == (3, 3)
        assert grads.d_rotation.shape == (3, 4)
        assert grads.d_sh.shape == (3, 1, 3)
        assert grads.flat(1).shape == (14,)

    def test_filtered_gaussian_has_zero_gradient(self, rng, tiny_camera):
        kept = broad_gaussian(rng, 3.0, (0.55, 0.6))
        behind = broad_gaussian(rng, -3.0, (0.55, 0.6))
        _, grads = backward([kept, behind], tiny_camera, random_image(rng), SMOOTH, workers=1)
        assert float(grads.flat(0).abs().max()) > 0.0
        assert float(grads.flat(1).abs().max()) == 0.0

    def test_input_scene_untouched(self, rng, tiny_camera):
        scene = GaussianScene.from_gaussians([broad_gaussian(rng, 3.0, (0.55, 0.6))])
        before = flatten(scene)
        backward(scene, tiny_camera, random_image(rng), SMOOTH, workers=1)
        assert np.array_equal(before, flatten(scene))
        assert not scene.positions.requires_grad

    @pytest.mark.parametrize("mode", ["affine", "conic"])
    @pytest.mark.parametrize("count", [1, 2])
    def test_matches_finite_differences(self, rng, tiny_camera, mode, count):
        gaussians = [broad_gaussian(rng, 3.0, (0.55, 0.6))]
        if count == 2:
            gaussians.append(broad_gaussian(rng, 4.0, (0.75, 0.8)))
        assert_matches_finite_differences(rng, gaussians, tiny_camera, mode)


@pytest.mark.slow
@pytest.mark.parametrize("mode", ["affine", "conic"])
@pytest.mark.parametrize("seed", range(100))
def test_gradient_suite(tiny_camera, mode, seed):
    rng = np.random.default_rng(1000 + seed)
    assert_matches_finite_differences(rng, [broad_gaussian(rng, 3.0, (0.55, 0.6))], tiny_camera, mode)


class TestFit:
    @pytest.fixture
    def target(self, rng):
        gaussians = [broad_gaussian(rng, 3.0, (0.3, 0.4)) for _ in range(3)]
        cameras = [
            Camera.look_at(eye, (0.0, 0.0, 3.0), (0.0, -1.0, 0.0), 16.0, 16.0, 16, 16, camera_id=i)
            for i, eye in enumerate([(0.0, 0.0, 0.0), (0.5, 0.0, 0.1), (-0.5, 0.2, 0.1)])
        ]
        rasterizer = Rasterizer(SMOOTH, workers=1)
        refs = [rasterizer.render(gaussians, cam) for cam in cameras]
        return GaussianScene.from_gaussians(gaussians), cameras, refs

    def test_fixed_point(self, target):
        scene, cameras, refs = target
        cfg = FitConfig(iterations=3, loss_lambda=0.0, progress=False)
        fitted, history = fit(scene, cameras, refs, cfg, SMOOTH, workers=1)
        assert [r.iteration for r in history] == [0, 1, 2]
        assert all(r.loss == pytest.approx(0.0, abs=1e-12) for r in history)
        for before, after in zip(scene.parameters(), fitted.parameters()):
            assert torch.equal(before, after)

    def test_loss_decreases(self, target):
        scene, cameras, refs = target
        start = scene.clone()
        start.sh_coeffs += 0.3
        start.opacity_logits -= 0.5
        cfg = FitConfig(iterations=40, lr_sh=0.02, lr_opacity=0.05, progress=False)
        fitted, history = fit(start, cameras, refs, cfg, SMOOTH, workers=1)
        assert history[-1].loss < history[0].loss
        assert history[-1].psnr > history[0].psnr
        assert not torch.equal(fitted.sh_coeffs, start.sh_coeffs)

    def test_deterministic_with_camera_subsets(self, target):
        scene, cameras, refs = target
        start = scene.clone()
        start.positions += 0.02
        cfg = FitConfig(iterations=6, cameras_per_step=1, seed=3, progress=False)
        first = fit(start, cameras, refs, cfg, SMOOTH, workers=1)
        second = fit(start, cameras, refs, cfg, SMOOTH, workers=2)
        assert [r.loss for r in first[1]] == [r.loss for r in second[1]]
        assert torch.equal(first[0].positions, second[0].positions)

    def test_divergence_reports_iteration(self, target):
        scene, cameras, refs = target
        broken = scene.clone()
        broken.sh_coeffs[0, 0, 0] = float("nan")
        with pytest.raises(FitDivergenceError) as info:
            fit(broken, cameras, refs, FitConfig(iterations=2, progress=False), SMOOTH, workers=1)
        assert info.value.iteration == 0

    def test_input_validation(self, target):
        scene, cameras, refs = target
        cfg = FitConfig(iterations=1, progress=False)
        with pytest.raises(DimensionMismatchError):
            fit(scene, cameras, refs[:2], cfg, SMOOTH, workers=1)
        with pytest.raises(InvalidParameterError):
            fit(scene, [], [], cfg, SMOOTH, workers=1)
        with pytest.raises(ValidationError):
            FitConfig(projection="ortho")

    def test_config_defaults(self):
        cfg = FitConfig.from_config(iterations=7)
        assert cfg.iterations == 7
        assert cfg.lr_position == pytest.approx(2e-4)
        assert cfg.cameras_per_step is None

    def test_scene_extent(self):
        single = [Camera.identity(10.0, 10.0, 8, 8)]
        assert scene_extent(single) == 1.0
        pair = [
            Camera.look_at((2.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 1.0, 0.0), 10.0, 10.0, 8, 8),
            Camera.look_at((-2.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 1.0, 0.0), 10.0, 10.0, 8, 8),
        ]
        assert scene_extent(pair) == pytest.approx(2.2)


@pytest.mark.slow
@pytest.mark.parametrize("mode", ["conic", "affine"])
def test_recovers_jittered_scene(rng, mode):
    generator = SceneGenerator(seed=5)
    target = GaussianScene.from_gaussians(generator.generate(16, "sphere-grid"))
    cameras = generator.orbit_cameras(3, radius=4.0, width=64, height=64, fov=50.0)
    rasterizer = Rasterizer(RenderOptions(), workers=1)
    with torch.no_grad():
        refs = [rasterizer.render(target, cam, mode) for cam in cameras]

    start = target.clone()
    start.positions += torch.tensor(rng.uniform(-0.05, 0.05, size=start.positions.shape), dtype=DTYPE)
    cfg = FitConfig(iterations=2000, projection=mode, progress=False)
    _, history = fit(start, cameras, refs, cfg, RenderOptions(), workers=1)

    assert history[-1].psnr > history[0].psnr
    window = np.convolve([r.loss for r in history], np.ones(50) / 50, mode="valid")
    assert window[-1] < window[0]
    if mode == "conic":
        assert history[-1].psnr >= 35.0
