"""Multi-level orthonormal 2-D Haar analysis/synthesis and the
background-guidance filter built on it.

On each 2x2 block [[a, b], [c, d]] one level produces

    A = (a+b+c+d)/2          approximation
    V = (a-b+c-d)/2          vertical detail (high-pass across columns)
    H = (a+b-c-d)/2          horizontal detail (high-pass across rows)
    D = (a-b-c+d)/2          diagonal detail

The /2 normalization makes the transform orthonormal, so total subband
energy equals input energy and the inverse is the same butterfly. Vertical
stripes (column-constant components) live entirely in {A, V}; zeroing the
approximation and every V subband therefore removes all vertical structure
while keeping horizontal and diagonal detail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .imgcore import check_images


@dataclass
class LevelBands:
    h: np.ndarray
    v: np.ndarray
    d: np.ndarray


@dataclass
class WaveletPyramid:
    details: list[LevelBands]  # finest (level 1) first
    approx: np.ndarray

    @property
    def levels(self) -> int:
        return len(self.details)


@dataclass(frozen=True)
class HbgmConfig:
    levels: int = 3


def _check_divisible(h: int, w: int, levels: int) -> None:
    if levels < 1:
        raise DataError(f"levels must be >= 1, got {levels}")
    div = 1 << levels
    if h % div or w % div:
        raise DataError(
            f"dims ({h}, {w}) not divisible by 2^{levels}; no implicit padding"
        )


def haar_decompose(x: np.ndarray, levels: int) -> WaveletPyramid:
    """L-level orthonormal Haar decomposition of a (B, H, W) batch."""
    arr = check_images(x)
    _, h, w = arr.shape
    _check_divisible(h, w, levels)
    details = []
    cur = arr
    for _ in range(levels):
        a = cur[:, 0::2, 0::2]
        b = cur[:, 0::2, 1::2]
        c = cur[:, 1::2, 0::2]
        d = cur[:, 1::2, 1::2]
        details.append(
            LevelBands(
                h=(a + b - c - d) / 2,
                v=(a - b + c - d) / 2,
                d=(a - b - c + d) / 2,
            )
        )
        cur = (a + b + c + d) / 2
    return WaveletPyramid(details, cur)


def haar_reconstruct(p: WaveletPyramid) -> np.ndarray:
    """Exact inverse of haar_decompose."""
    cur = np.asarray(p.approx, dtype=np.float64)
    if cur.ndim != 3:
        raise DataError(f"approximation must be (B, h, w), got {cur.shape}")
    for bands in reversed(p.details):
        hh, vv, dd = (np.asarray(s, dtype=np.float64) for s in (bands.h, bands.v, bands.d))
        if not (hh.shape == vv.shape == dd.shape == cur.shape):
            raise DataError(
                f"inconsistent subband dims {hh.shape}/{vv.shape}/{dd.shape} vs {cur.shape}"
            )
        bsz, h2, w2 = cur.shape
        out = np.empty((bsz, h2 * 2, w2 * 2), dtype=np.float64)
        out[:, 0::2, 0::2] = (cur + vv + hh + dd) / 2
        out[:, 0::2, 1::2] = (cur - vv + hh - dd) / 2
        out[:, 1::2, 0::2] = (cur + vv - hh - dd) / 2
        out[:, 1::2, 1::2] = (cur - vv - hh + dd) / 2
        cur = out
    return cur


def pyramid_energy(p: WaveletPyramid) -> float:
    total = float(np.sum(np.square(p.approx)))
    for bands in p.details:
        total += sum(float(np.sum(np.square(s))) for s in (bands.h, bands.v, bands.d))
    return total


def hbgm(x: np.ndarray, levels: int = 3) -> np.ndarray:
    """Strip all vertical structure: decompose, zero A_L and every V level,
    reconstruct. Column-constant inputs map to exactly zero."""
    p = haar_decompose(x, levels)
    p.approx = np.zeros_like(p.approx)
    for bands in p.details:
        bands.v = np.zeros_like(bands.v)
    return haar_reconstruct(p)
