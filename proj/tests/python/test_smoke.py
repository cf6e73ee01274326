"""Smoke tests for the python bindings: each core operation is exercised once
against a plain-numpy reference."""

import numpy as np
import pytest

import derainkit as dk


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def test_temporal_median_matches_numpy(rng):
    stack = rng.random((7, 12, 10, 3))
    np.testing.assert_array_equal(dk.temporal_median(stack), np.median(stack, axis=0))


def test_temporal_mean_matches_numpy(rng):
    stack = rng.random((6, 9, 9, 3))
    np.testing.assert_allclose(dk.temporal_mean(stack), stack.mean(axis=0), atol=1e-12)


def test_weighted_average_endpoints(rng):
    a = rng.random((8, 8, 3))
    b = rng.random((8, 8, 3))
    np.testing.assert_array_equal(dk.weighted_average(a, b, 1.0), a)
    np.testing.assert_array_equal(dk.weighted_average(a, b, 0.0), b)
    np.testing.assert_allclose(dk.weighted_average(a, b, 0.9), 0.9 * a + 0.1 * b, atol=1e-12)


def test_psnr_anchor(rng):
    a = rng.random((16, 16, 3)) * 0.9
    assert dk.psnr(a, a + 0.1) == pytest.approx(20.0, abs=1e-9)
    assert np.isinf(dk.psnr(a, a))


def test_ssim_self_is_one(rng):
    a = rng.random((16, 16, 3))
    assert dk.ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_evaluate_bundle(rng):
    a = rng.random((16, 16, 3)) * 0.9
    report = dk.evaluate(a + 0.1, a)
    assert report["psnr"] == pytest.approx(20.0, abs=1e-9)
    assert report["mse"] == pytest.approx(0.01, abs=1e-12)
    assert 0.0 <= report["ssim"] <= 1.0


def test_fit_and_apply_affine(rng):
    observed = rng.random((10, 3))
    estimated = 1.4 * observed - 0.05
    gain, offset = dk.fit_affine(observed, estimated)
    np.testing.assert_allclose(gain, [1.4] * 3, atol=1e-10)
    np.testing.assert_allclose(offset, [-0.05] * 3, atol=1e-10)

    img = rng.random((6, 6, 3))
    out = dk.apply_affine(img, gain, offset)
    np.testing.assert_allclose(out, np.clip(1.4 * img - 0.05, 0.0, 1.0), atol=1e-12)


def test_estimate_pixel_self_match(rng):
    flat = np.full((24, 24, 3), 0.4)
    est = dk.estimate_pixel(flat, (7, 9), [(flat, flat)])
    np.testing.assert_allclose(est, [0.4] * 3, atol=1e-12)


def test_fit_affine_plus_recovers_a_shift(rng):
    ramp = np.linspace(0.1, 0.8, 64)[None, :, None]
    clean = np.broadcast_to(ramp, (48, 64, 3)).copy()
    observed = 1.1 * clean + 0.02
    gain, offset, used, skipped = dk.fit_affine_plus(
        observed, n_sets=3, k=10, seed=5, library=[(observed, clean)], match_query=observed
    )
    assert used == 3 and skipped == 0
    np.testing.assert_allclose(gain, [1.0 / 1.1] * 3, atol=0.05)
    np.testing.assert_allclose(offset, [-0.02 / 1.1] * 3, atol=0.05)


def test_png_round_trip(tmp_path, rng):
    img = np.round(rng.random((9, 11, 3)) * 255) / 255
    dk.save_image(img, tmp_path / "x.png", bit_depth=8)
    np.testing.assert_array_equal(dk.load_image(tmp_path / "x.png"), img)


def test_generate_scene_is_deterministic():
    stack_a, clean_a, bg_a = dk.generate_scene(height=32, width=32, frames=9, seed=3)
    stack_b, clean_b, bg_b = dk.generate_scene(height=32, width=32, frames=9, seed=3)
    np.testing.assert_array_equal(stack_a, stack_b)
    np.testing.assert_array_equal(clean_a, clean_b)
    assert stack_a.shape == (9, 32, 32, 3)

    np.testing.assert_array_equal(
        np.median(dk.generate_scene(height=32, width=32, frames=9, seed=4)[0], axis=0),
        dk.generate_scene(height=32, width=32, frames=9, seed=4)[1],
    )


def test_errors_surface_as_exceptions(rng):
    with pytest.raises(dk.DerainError):
        dk.weighted_average(rng.random((4, 4, 3)), rng.random((5, 4, 3)), 0.5)
    with pytest.raises(dk.DerainError):
        dk.ssim(rng.random((4, 4, 3)), rng.random((4, 4, 3)))
