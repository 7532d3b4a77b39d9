"""Orthonormal 2x2 Haar butterflies as torch sampling operators.

Per 2x2 block [[a, b], [c, d]]:
    A = (a+b+c+d)/2, H = (a+b-c-d)/2, V = (a-b+c-d)/2, D = (a-b-c+d)/2
haar_down stacks the four bands along channels in blocks [A | H | V | D],
so (B, C, H, W) -> (B, 4C, H/2, W/2); haar_up is the exact inverse.
"""

from __future__ import annotations

import torch


def haar_down(x: torch.Tensor) -> torch.Tensor:
    if x.ndim != 4:
        raise ValueError(f"expected (B, C, H, W), got {tuple(x.shape)}")
    if x.shape[-2] % 2 or x.shape[-1] % 2:
        raise ValueError(f"odd spatial dims {tuple(x.shape[-2:])}")
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    return torch.cat(
        [(a + b + c + d) / 2, (a + b - c - d) / 2,
         (a - b + c - d) / 2, (a - b - c + d) / 2], dim=1
    )


def haar_up(x: torch.Tensor) -> torch.Tensor:
    if x.ndim != 4 or x.shape[1] % 4:
        raise ValueError(f"expected (B, 4C, h, w), got {tuple(x.shape)}")
    ch = x.shape[1] // 4
    aa, hh, vv, dd = x[:, :ch], x[:, ch:2 * ch], x[:, 2 * ch:3 * ch], x[:, 3 * ch:]
    out = x.new_empty((x.shape[0], ch, x.shape[2] * 2, x.shape[3] * 2))
    out[..., 0::2, 0::2] = (aa + vv + hh + dd) / 2
    out[..., 0::2, 1::2] = (aa - vv + hh - dd) / 2
    out[..., 1::2, 0::2] = (aa + vv - hh - dd) / 2
    out[..., 1::2, 1::2] = (aa - vv - hh + dd) / 2
    return out


def decompose(x: torch.Tensor, levels: int):
    """Multi-level pyramid on (B, 1, H, W): list of per-level (H, V, D)
    finest first, plus the final approximation."""
    details = []
    cur = x
    for _ in range(levels):
        bands = haar_down(cur)
        ch = bands.shape[1] // 4
        cur = bands[:, :ch]
        details.append((bands[:, ch:2 * ch], bands[:, 2 * ch:3 * ch], bands[:, 3 * ch:]))
    return details, cur


def reconstruct(details, approx: torch.Tensor) -> torch.Tensor:
    cur = approx
    for hh, vv, dd in reversed(details):
        cur = haar_up(torch.cat([cur, hh, vv, dd], dim=1))
    return cur


def hbgm(x: torch.Tensor, levels: int) -> torch.Tensor:
    """Zero the approximation and every vertical-detail band, reconstruct."""
    details, approx = decompose(x, levels)
    details = [(hh, torch.zeros_like(vv), dd) for hh, vv, dd in details]
    return reconstruct(details, torch.zeros_like(approx))
