import numpy as np
import pytest

from cswarp.errors import ContractError, DomainError
from cswarp.grid import Frame, SupportPolicy, clamp_support, grid_distance_d, make_grid
from cswarp.imageops import ImageBuffer, l1_distance
from cswarp.kernels import KernelFamily
from cswarp.registration import (
    RegistrationConfig,
    compare_kernels,
    loss_and_grad,
    make_synthetic_pair,
    register,
)

FAST = RegistrationConfig(iterations=40, levels=2, step_size=0.05)


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"iterations": 0},
            {"levels": 0},
            {"step_size": -1.0},
            {"alpha_hat0": 0.0},
            {"alpha_hat0": 1.0},
        ],
    )
    def test_domain(self, kwargs):
        with pytest.raises(DomainError):
            RegistrationConfig(**kwargs)

    def test_family_coercion(self):
        cfg = RegistrationConfig(family="tps")
        assert cfg.family is KernelFamily.TPS


class TestLossAndGrad:
    def test_identical_images_zero_gradients(self):
        src, _, _ = make_synthetic_pair(48, 64, seed=0)
        cfg = RegistrationConfig()
        n = cfg.rows * cfg.cols
        loss, g_theta, g_ahat = loss_and_grad(src, src, np.zeros((n, 2)), 0.3, cfg)
        # at theta = 0 the warp is identity, diff = 0, so the Charbonnier
        # surrogate sits exactly at eps with a flat gradient
        assert loss == pytest.approx(cfg.charbonnier_eps, abs=1e-15)
        assert np.abs(g_theta).max() == 0.0
        assert g_ahat == 0.0

    def test_constant_images_flat_everywhere(self):
        img = ImageBuffer(np.full((48, 48), 0.6))
        cfg = RegistrationConfig()
        n = cfg.rows * cfg.cols
        rng = np.random.default_rng(0)
        theta = rng.uniform(-0.05, 0.05, (n, 2))
        _, g_theta, g_ahat = loss_and_grad(img, img, theta, 0.4, cfg)
        assert np.abs(g_theta).max() < 1e-12
        assert abs(g_ahat) < 1e-12

    def test_shape_mismatch(self):
        a = ImageBuffer(np.zeros((32, 32)))
        b = ImageBuffer(np.zeros((32, 40)))
        with pytest.raises(ContractError):
            loss_and_grad(a, b, np.zeros((25, 2)), 0.3, RegistrationConfig())

    def test_masked_finite_difference_fidelity(self):
        """Small-scale replica of the gradient check: analytic vs central FD."""
        src, tgt, _ = make_synthetic_pair(48, 64, seed=3)
        cfg = RegistrationConfig()
        frame = Frame(48, 64, normalized=True)
        grid = make_grid(cfg.rows, cfg.cols, frame)
        rng = np.random.default_rng(4)
        theta = rng.uniform(-0.04, 0.04, grid.base.shape)
        alpha_hat = 0.35
        mask = _fd_safe_mask(frame, grid, theta, alpha_hat, cfg)
        assert mask.mean() > 0.5  # the mask must not trivialize the check

        _, g_theta, g_ahat = loss_and_grad(src, tgt, theta, alpha_hat, cfg, pixel_mask=mask)
        h = 1e-5
        checked = 0
        for k in (0, 6, 12, 18, 24):
            for ax in (0, 1):
                tp, tm = theta.copy(), theta.copy()
                tp[k, ax] += h
                tm[k, ax] -= h
                lp = loss_and_grad(src, tgt, tp, alpha_hat, cfg, pixel_mask=mask)[0]
                lm = loss_and_grad(src, tgt, tm, alpha_hat, cfg, pixel_mask=mask)[0]
                fd = (lp - lm) / (2 * h)
                denom = max(abs(fd), 1e-6)
                assert abs(fd - g_theta[k, ax]) / denom < 2e-3
                checked += 1
        lp = loss_and_grad(src, tgt, theta, alpha_hat + h, cfg, pixel_mask=mask)[0]
        lm = loss_and_grad(src, tgt, theta, alpha_hat - h, cfg, pixel_mask=mask)[0]
        fd = (lp - lm) / (2 * h)
        assert abs(fd - g_ahat) / max(abs(fd), 1e-6) < 2e-3
        assert checked == 10


def _fd_safe_mask(frame, grid, theta, alpha_hat, cfg):
    """Pixels whose warped sample sits away from bilinear-cell edges and
    away from every kernel support boundary, so the loss is locally smooth."""
    from cswarp.solver import evaluate_points, fit_interpolant
    from cswarp.kernels import KernelSpec

    policy = SupportPolicy.for_grid(grid, cfg.lambda_alpha)
    alpha = clamp_support(alpha_hat, policy)
    model = fit_interpolant(
        grid.base, grid.base + theta, KernelSpec(KernelFamily.WENDLAND31, alpha)
    )
    pts = frame.pixel_centers().reshape(-1, 2)
    coords = evaluate_points(model, pts)
    fxy = frame.to_pixel(coords)
    frac = fxy - np.floor(fxy)
    interior = ((frac > 0.05) & (frac < 0.95)).all(axis=1)
    inside = (fxy[:, 0] > 0.6) & (fxy[:, 0] < frame.width - 1.6)
    inside &= (fxy[:, 1] > 0.6) & (fxy[:, 1] < frame.height - 1.6)
    dist = np.sqrt(((pts[:, None, :] - grid.base[None, :, :]) ** 2).sum(-1))
    away = (np.abs(dist - alpha) > 1e-3).all(axis=1)
    return interior & inside & away


class TestRegister:
    def test_identity_pair(self):
        src, _, _ = make_synthetic_pair(48, 64, seed=1)
        res = register(src, src, FAST)
        assert res.l1 <= 1e-3
        assert np.abs(res.theta).max() <= 0.02

    def test_recovers_small_warp(self):
        src, tgt, truth = make_synthetic_pair(64, 64, seed=2, theta_scale=0.06)
        res = register(src, tgt, RegistrationConfig(iterations=80, levels=3))
        assert res.l1 <= 0.02
        assert res.ssim >= 0.9

    def test_alpha_respects_floor(self):
        src, tgt, _ = make_synthetic_pair(48, 48, seed=3)
        res = register(src, tgt, FAST)
        frame = Frame(48, 48, normalized=True)
        d = grid_distance_d(make_grid(FAST.rows, FAST.cols, frame))
        assert res.d == pytest.approx(d)
        assert res.alpha >= d
        assert all(a >= d for a in res.alpha_curve)

    def test_frozen_alpha(self):
        src, tgt, _ = make_synthetic_pair(48, 48, seed=4)
        cfg = RegistrationConfig(
            iterations=20, levels=1, optimize_alpha=False, alpha_hat0=0.42
        )
        res = register(src, tgt, cfg)
        assert res.alpha_hat == 0.42
        assert len(set(res.alpha_curve)) == 1

    def test_deterministic(self):
        src, tgt, _ = make_synthetic_pair(48, 48, seed=5)
        r1 = register(src, tgt, FAST)
        r2 = register(src, tgt, FAST)
        assert np.array_equal(r1.theta, r2.theta)
        assert r1.alpha_hat == r2.alpha_hat
        assert r1.loss_curve == r2.loss_curve
        assert np.array_equal(r1.warped.data, r2.warped.data)

    def test_curve_bookkeeping(self):
        src, tgt, _ = make_synthetic_pair(48, 48, seed=6)
        cfg = RegistrationConfig(iterations=10, levels=2)
        res = register(src, tgt, cfg)
        assert res.iterations_run == len(res.loss_curve) == len(res.alpha_curve)
        assert res.iterations_run == cfg.iterations * cfg.levels + 1

    def test_best_iterate_not_worse_than_curve(self):
        src, tgt, _ = make_synthetic_pair(48, 48, seed=7)
        res = register(src, tgt, FAST)
        # reported L1 comes from the best full-resolution iterate; it can
        # differ from the curve only through PNG-free requantization, i.e.
        # not at all here
        full_res_curve = res.loss_curve[FAST.iterations:]
        assert res.l1 <= min(full_res_curve) + 1e-12

    def test_too_small_images(self):
        img = ImageBuffer(np.zeros((8, 8)))
        with pytest.raises(ContractError):
            register(img, img, FAST)


class TestSynthetic:
    def test_deterministic(self):
        a = make_synthetic_pair(48, 64, seed=9)
        b = make_synthetic_pair(48, 64, seed=9)
        assert np.array_equal(a[0].data, b[0].data)
        assert np.array_equal(a[1].data, b[1].data)
        assert a[2] == b[2]

    def test_seed_changes_output(self):
        a = make_synthetic_pair(48, 64, seed=9)
        b = make_synthetic_pair(48, 64, seed=10)
        assert not np.array_equal(a[1].data, b[1].data)

    def test_zero_theta_gives_identical_pair(self):
        src, tgt, truth = make_synthetic_pair(
            48, 64, theta_star=np.zeros((25, 2)), seed=11
        )
        assert np.array_equal(src.data, tgt.data)
        assert truth["alpha_star"] >= truth["alpha_hat_star"]

    def test_target_actually_differs(self):
        src, tgt, _ = make_synthetic_pair(64, 64, seed=12)
        assert l1_distance(src, tgt) > 1e-3

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            make_synthetic_pair(16, 64)
        with pytest.raises(DomainError):
            make_synthetic_pair(64, 64, pattern="stripes")


class TestCompare:
    def test_locality_contrast(self):
        # Single-center stimulus far from the grid border: the Wendland
        # fit must leave pixels outside its support untouched, while the
        # TPS fit moves a visible fraction of them.
        src, tgt, _ = make_synthetic_pair(
            48, 48, theta_star=_one_hot_theta(), alpha_hat_star=0.2, seed=13
        )
        cfg = RegistrationConfig(iterations=30, levels=2)
        report, results = compare_kernels(src, tgt, cfg)
        wendland = report["kernels"]["wendland31"]
        tps = report["kernels"]["tps"]
        assert wendland["locality_fraction"] == 0.0
        assert tps["locality_fraction"] > 0.0
        assert set(results) == {KernelFamily.WENDLAND31, KernelFamily.TPS}
        for block in (wendland, tps):
            assert 0.0 <= block["ssim"] <= 1.0


def _one_hot_theta():
    theta = np.zeros((25, 2))
    theta[12] = [0.08, 0.05]
    return theta
