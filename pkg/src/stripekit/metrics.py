"""Image-quality metrics: PSNR, SSIM, multi-scale SSIM, and the
MS-SSIM + smoothed-L1 mixed distance.

All metrics take single 2-D images with a nominal [0, 1] range (MAX = 1).
Local statistics use a Gaussian window (side 11, sigma 1.5, normalized to
sum 1) in 'valid' mode; at scales where an image side is smaller than the
window, the window shrinks to that side and is renormalized, which is what
lets M = 5 run on 64x64 inputs (coarsest scale 4x4).

MS-SSIM here is the unweighted product over M scales of the mean
contrast-structure factor, with the luminance factor folded in at the
coarsest scale only, so M = 1 is *identical* to single-scale SSIM. Scales
are linked by 2x2 average pooling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    window_sigma: float = 1.5
    c1: float = 0.01 ** 2
    c2: float = 0.03 ** 2
    scales: int = 5  # M

    def __post_init__(self):
        if self.window_size < 1 or self.window_size % 2 == 0:
            raise DataError("window size must be a positive odd integer")
        if self.c1 <= 0 or self.c2 <= 0:
            raise DataError("stability constants must be positive")
        if self.scales < 1:
            raise DataError("scale count must be >= 1")


DEFAULT_PARAMS = SsimParams()


def gaussian_window(n: int, sigma: float) -> np.ndarray:
    """Length-n Gaussian taps, normalized to sum 1."""
    c = (n - 1) / 2.0
    g = np.exp(-((np.arange(n) - c) ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


def _as_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DataError(f"metrics take 2-D images, got {a.shape} and {b.shape}")
    if a.shape != b.shape:
        raise DataError(f"image dims differ: {a.shape} vs {b.shape}")
    return a, b


def _filter_valid(img: np.ndarray, gh: np.ndarray, gw: np.ndarray) -> np.ndarray:
    # Separable 'valid' correlation (the window is symmetric).
    out = sliding_window_view(img, len(gh), axis=0) @ gh
    return sliding_window_view(out, len(gw), axis=1) @ gw


def _scale_windows(h: int, w: int, params: SsimParams) -> tuple[np.ndarray, np.ndarray]:
    if h < 1 or w < 1:
        raise DataError("image too small for the requested scale count")
    return (
        gaussian_window(min(params.window_size, h), params.window_sigma),
        gaussian_window(min(params.window_size, w), params.window_sigma),
    )


def _ssim_maps(x, y, params: SsimParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel (luminance, contrast-structure) maps at one scale."""
    gh, gw = _scale_windows(*x.shape, params)
    mu_x = _filter_valid(x, gh, gw)
    mu_y = _filter_valid(y, gh, gw)
    sxx = _filter_valid(x * x, gh, gw) - mu_x * mu_x
    syy = _filter_valid(y * y, gh, gw) - mu_y * mu_y
    sxy = _filter_valid(x * y, gh, gw) - mu_x * mu_y
    lum = (2 * mu_x * mu_y + params.c1) / (mu_x * mu_x + mu_y * mu_y + params.c1)
    cs = (2 * sxy + params.c2) / (sxx + syy + params.c2)
    return lum, cs


def _downsample2(img: np.ndarray) -> np.ndarray:
    h2, w2 = img.shape[0] // 2, img.shape[1] // 2
    return img[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def psnr(x, y) -> float:
    """10*log10(1/MSE) on the [0, 1] scale; identical inputs give +inf."""
    a, b = _as_pair(x, y)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def ms_ssim(x, y, params: SsimParams = DEFAULT_PARAMS) -> float:
    """Multi-scale structural similarity (see module docstring for the
    exact convention)."""
    a, b = _as_pair(x, y)
    value = 1.0
    for m in range(1, params.scales + 1):
        if m < params.scales:
            _, cs = _ssim_maps(a, b, params)
            value *= float(cs.mean())
            a, b = _downsample2(a), _downsample2(b)
        else:
            lum, cs = _ssim_maps(a, b, params)
            value *= float((lum * cs).mean())
    return value


def ssim(x, y, params: SsimParams = DEFAULT_PARAMS) -> float:
    """Single-scale SSIM: the M = 1 case of ms_ssim."""
    return ms_ssim(x, y, SsimParams(
        window_size=params.window_size,
        window_sigma=params.window_sigma,
        c1=params.c1,
        c2=params.c2,
        scales=1,
    ))


def coarsest_scale_window(h: int, w: int, params: SsimParams) -> tuple[np.ndarray, np.ndarray]:
    """The Gaussian window as adapted to the coarsest MS-SSIM scale."""
    hc, wc = h, w
    for _ in range(params.scales - 1):
        hc, wc = hc // 2, wc // 2
    return _scale_windows(hc, wc, params)


def mix_distance(x, y, alpha: float, params: SsimParams = DEFAULT_PARAMS) -> float:
    """alpha*(1 - MS-SSIM) + (1-alpha)*mean(G * |x - y|).

    The absolute-difference map is smoothed (valid mode) with the
    coarsest-scale Gaussian window at full resolution before averaging;
    a constant difference map is therefore preserved exactly.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DataError(f"alpha must be in [0, 1], got {alpha}")
    a, b = _as_pair(x, y)
    ms_term = 1.0 - ms_ssim(a, b, params)
    gh, gw = coarsest_scale_window(*a.shape, params)
    l1_term = float(_filter_valid(np.abs(a - b), gh, gw).mean())
    return alpha * ms_term + (1.0 - alpha) * l1_term
