"""Torch re-implementation of the evaluation metrics, matching the oracle
conventions: Gaussian window side min(11, side) per axis (sigma 1.5,
renormalized), valid-mode separable filtering, 2x2 average-pool between
scales, unweighted product across scales with luminance folded in at the
coarsest scale only (so M = 1 is single-scale SSIM)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    window_sigma: float = 1.5
    c1: float = 0.01 ** 2
    c2: float = 0.03 ** 2
    scales: int = 5


DEFAULT_PARAMS = SsimParams()


def gaussian_window(n: int, sigma: float, dtype, device) -> torch.Tensor:
    c = (n - 1) / 2.0
    idx = torch.arange(n, dtype=dtype, device=device)
    g = torch.exp(-((idx - c) ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: torch.Tensor, gh: torch.Tensor, gw: torch.Tensor) -> torch.Tensor:
    # img (B, 1, H, W); separable valid correlation
    out = F.conv2d(img, gh.view(1, 1, -1, 1))
    return F.conv2d(out, gw.view(1, 1, 1, -1))


def _scale_windows(h: int, w: int, p: SsimParams, dtype, device):
    if h < 1 or w < 1:
        raise ValueError("image too small for the requested scale count")
    return (gaussian_window(min(p.window_size, h), p.window_sigma, dtype, device),
            gaussian_window(min(p.window_size, w), p.window_sigma, dtype, device))


def _ssim_maps(x, y, p: SsimParams):
    gh, gw = _scale_windows(x.shape[-2], x.shape[-1], p, x.dtype, x.device)
    mu_x = _filter_valid(x, gh, gw)
    mu_y = _filter_valid(y, gh, gw)
    sxx = _filter_valid(x * x, gh, gw) - mu_x * mu_x
    syy = _filter_valid(y * y, gh, gw) - mu_y * mu_y
    sxy = _filter_valid(x * y, gh, gw) - mu_x * mu_y
    lum = (2 * mu_x * mu_y + p.c1) / (mu_x * mu_x + mu_y * mu_y + p.c1)
    cs = (2 * sxy + p.c2) / (sxx + syy + p.c2)
    return lum, cs


def _downsample2(img: torch.Tensor) -> torch.Tensor:
    h2, w2 = img.shape[-2] // 2, img.shape[-1] // 2
    return F.avg_pool2d(img[..., : 2 * h2, : 2 * w2], 2)


def _as_b1hw(x: torch.Tensor) -> torch.Tensor:
    if x.ndim == 2:
        return x[None, None]
    if x.ndim == 3:
        return x[:, None]
    return x


def psnr(x: torch.Tensor, y: torch.Tensor) -> float:
    mse = float(torch.mean((x.double() - y.double()) ** 2))
    return float("inf") if mse == 0.0 else 10.0 * math.log10(1.0 / mse)


def ms_ssim(x: torch.Tensor, y: torch.Tensor, p: SsimParams = DEFAULT_PARAMS) -> torch.Tensor:
    """Per-image MS-SSIM, shape (B,). Differentiable."""
    a, b = _as_b1hw(x), _as_b1hw(y)
    value = torch.ones(a.shape[0], dtype=a.dtype, device=a.device)
    for m in range(1, p.scales + 1):
        if m < p.scales:
            _, cs = _ssim_maps(a, b, p)
            value = value * cs.mean(dim=(1, 2, 3))
            a, b = _downsample2(a), _downsample2(b)
        else:
            lum, cs = _ssim_maps(a, b, p)
            value = value * (lum * cs).mean(dim=(1, 2, 3))
    return value


def ssim(x: torch.Tensor, y: torch.Tensor, p: SsimParams = DEFAULT_PARAMS) -> torch.Tensor:
    return ms_ssim(x, y, SsimParams(p.window_size, p.window_sigma, p.c1, p.c2, 1))


def coarsest_window(h: int, w: int, p: SsimParams, dtype, device):
    hc, wc = h, w
    for _ in range(p.scales - 1):
        hc, wc = hc // 2, wc // 2
    return _scale_windows(hc, wc, p, dtype, device)


def mix_distance(x: torch.Tensor, y: torch.Tensor, alpha: float,
                 p: SsimParams = DEFAULT_PARAMS) -> torch.Tensor:
    """Per-image mixed distance, shape (B,)."""
    a, b = _as_b1hw(x), _as_b1hw(y)
    ms_term = 1.0 - ms_ssim(a, b, p)
    gh, gw = coarsest_window(a.shape[-2], a.shape[-1], p, a.dtype, a.device)
    l1 = _filter_valid((a - b).abs(), gh, gw).mean(dim=(1, 2, 3))
    return alpha * ms_term + (1.0 - alpha) * l1
