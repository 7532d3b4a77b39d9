import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stripekit import DataError, SsimParams, gaussian_window, mix_distance, ms_ssim, psnr, ssim

from conftest import smooth_image
from oracle_msssim import mix_oracle, ms_ssim_oracle


def pair(seed, h=64, w=64, noise=0.08):
    rng = np.random.default_rng(seed)
    x = smooth_image(seed, h, w)
    y = np.clip(x + rng.normal(0, noise, (h, w)), 0, 1)
    return x, y


# ---------------------------------------------------------------------------
# PSNR

def test_psnr_identical_is_inf():
    x = smooth_image(0)
    assert psnr(x, x) == float("inf")


def test_psnr_constant_offset_closed_form():
    x = smooth_image(1) * 0.8  # keep x + 0.1 inside [0, 1]
    assert psnr(x, x + 0.1) == pytest.approx(20.0, abs=1e-4)


def test_psnr_symmetric():
    x, y = pair(2)
    assert psnr(x, y) == psnr(y, x)


def test_psnr_dim_mismatch():
    with pytest.raises(DataError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_psnr_decreases_with_noise_amplitude():
    x = smooth_image(3)
    n = np.random.default_rng(3).normal(0, 1, x.shape)
    lo = np.clip(x + 0.05 * n, 0, 1)
    hi = np.clip(x + 0.10 * n, 0, 1)
    assert psnr(x, lo) > psnr(x, hi)


# ---------------------------------------------------------------------------
# SSIM

def test_ssim_self_is_one():
    x = smooth_image(4)
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-6)


def test_ssim_constant_images_closed_form():
    # sigma terms vanish; luminance term only
    c1 = 0.01 ** 2
    expected = (2 * 0.2 * 0.8 + c1) / (0.2 ** 2 + 0.8 ** 2 + c1)
    got = ssim(np.full((32, 32), 0.2), np.full((32, 32), 0.8))
    assert got == pytest.approx(expected, abs=1e-9)
    assert got == pytest.approx(0.4707, abs=1e-4)


def test_ssim_symmetric():
    x, y = pair(5)
    assert ssim(x, y) == pytest.approx(ssim(y, x), abs=1e-6)


def test_ssim_range():
    x, y = pair(6, noise=0.4)
    assert -1.0 <= ssim(x, y) <= 1.0


def test_window_normalized():
    for n in (11, 5, 4, 1):
        assert gaussian_window(n, 1.5).sum() == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# MS-SSIM

def test_ms_ssim_self_is_one():
    x = smooth_image(7)
    assert ms_ssim(x, x) == pytest.approx(1.0, abs=1e-6)


def test_ms_ssim_m1_equals_ssim():
    x, y = pair(8)
    p1 = SsimParams(scales=1)
    assert ms_ssim(x, y, p1) == ssim(x, y)  # identical code path, bitwise


def test_ms_ssim_matches_independent_oracle():
    x, y = pair(9)
    got = ms_ssim(x, y, SsimParams(scales=5))
    want = ms_ssim_oracle(x, y, scales=5)
    assert got == pytest.approx(want, abs=1e-6)


def test_ms_ssim_oracle_agreement_more_scales_and_sizes():
    for seed, (h, w), m in [(10, (64, 64), 3), (11, (32, 48), 4), (12, (128, 64), 5)]:
        x, y = pair(seed, h, w)
        assert ms_ssim(x, y, SsimParams(scales=m)) == pytest.approx(
            ms_ssim_oracle(x, y, scales=m), abs=1e-6)


def test_ms_ssim_too_small_errors():
    with pytest.raises(DataError):
        ms_ssim(np.zeros((8, 8)), np.zeros((8, 8)), SsimParams(scales=5))


def test_ms_ssim_symmetric():
    x, y = pair(13)
    assert ms_ssim(x, y) == pytest.approx(ms_ssim(y, x), abs=1e-6)


# ---------------------------------------------------------------------------
# Mixed distance

@pytest.mark.parametrize("alpha", [0.0, 0.5, 0.84, 1.0])
def test_mix_identical_is_zero(alpha):
    x = smooth_image(14)
    assert mix_distance(x, x, alpha) == 0.0


def test_mix_alpha_one_collapses_to_ms_term():
    x, y = pair(15)
    assert mix_distance(x, y, 1.0) == pytest.approx(1.0 - ms_ssim(x, y), abs=1e-12)


def test_mix_alpha_zero_constant_offset():
    x = smooth_image(16) * 0.8
    assert mix_distance(x, x + 0.1, 0.0) == pytest.approx(0.1, abs=1e-9)


def test_mix_matches_independent_oracle():
    x, y = pair(17)
    assert mix_distance(x, y, 0.84) == pytest.approx(mix_oracle(x, y, 0.84), abs=1e-6)


def test_mix_nonnegative():
    for seed in range(18, 24):
        x, y = pair(seed, noise=0.3)
        for alpha in (0.0, 0.3, 0.84, 1.0):
            assert mix_distance(x, y, alpha) >= 0.0


def test_mix_alpha_out_of_range():
    x = smooth_image(25)
    with pytest.raises(DataError):
        mix_distance(x, x, 1.5)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 5000), st.floats(0, 1))
def test_mix_property_nonneg_and_zero_on_equal(seed, alpha):
    x, y = pair(seed, h=32, w=32, noise=0.2)
    assert mix_distance(x, y, alpha, SsimParams(scales=3)) >= 0.0
    assert mix_distance(x, x, alpha, SsimParams(scales=3)) == 0.0
