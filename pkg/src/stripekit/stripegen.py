"""Column-structured polynomial stripe noise synthesis.

A stripy frame is built from four column-constant coefficient fields, one
per polynomial order m = 0..3:

    stripy = clean + F3^3 * clean + F2^2 * clean + F1 * clean + F0

where powers and products are elementwise. Each field repeats a single
length-W coefficient row: constant along every column, varying across
columns, which is exactly the signature of focal-plane-array stripe noise.
Coefficients are drawn i.i.d. at an intensity (sigma for Gaussian, mu for
Uniform) itself drawn uniformly per (item, order) from the configured
range.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError
from .imgcore import check_images
from .rng import NS_STRIPE, derive_stream

DISTRIBUTIONS = ("gaussian", "uniform")
ORDERS = (0, 1, 2, 3)


@dataclass(frozen=True)
class SgmConfig:
    distribution: str = "gaussian"
    intensity_min: float = 0.02
    intensity_max: float = 0.12
    order: int = 3
    clamp_output: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise DataError(f"unknown distribution {self.distribution!r}")
        if not 0 <= self.intensity_min <= self.intensity_max:
            raise DataError(
                f"invalid intensity range [{self.intensity_min}, {self.intensity_max}]"
            )
        if self.order != 3:
            raise DataError("polynomial order is fixed to 3")

    def with_seed(self, seed: int) -> "SgmConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class StripeField:
    """One column-constant coefficient field plus bookkeeping."""

    coeffs: np.ndarray  # (H, W), rows identical
    order_index: int
    intensity: float  # the drawn sigma / mu

    def __post_init__(self):
        if self.coeffs.ndim != 2:
            raise DataError(f"stripe field must be 2-D, got {self.coeffs.shape}")
        if not np.isfinite(self.coeffs).all():
            raise DataError("stripe field contains NaN or Inf")
        if self.coeffs.shape[0] > 1 and np.any(self.coeffs != self.coeffs[0]):
            raise DataError("stripe field rows are not identical")


def sample_stripe_field(
    cfg: SgmConfig, m: int, h: int, w: int, stream: np.random.Generator
) -> StripeField:
    """Draw one order-m field from an already-derived stream.

    The stream's draw order is pinned: first the intensity, then the W
    coefficients.
    """
    if m not in ORDERS:
        raise DataError(f"order index must be in {ORDERS}, got {m}")
    if w < 1 or h < 1:
        raise DataError(f"degenerate field dims ({h}, {w})")
    intensity = float(stream.uniform(cfg.intensity_min, cfg.intensity_max))
    if cfg.distribution == "gaussian":
        row = stream.normal(0.0, intensity, w) if intensity > 0 else np.zeros(w)
    else:
        row = stream.uniform(-intensity, intensity, w)
    return StripeField(np.tile(row, (h, 1)), m, intensity)


def apply_sgm(
    clean: np.ndarray, fields: list[StripeField], clamp_output: bool = True
) -> np.ndarray:
    """Apply the four per-order fields to a clean batch."""
    arr = check_images(clean)
    _, h, w = arr.shape
    if sorted(f.order_index for f in fields) != list(ORDERS):
        raise DataError("need exactly one field per order 0..3")
    by_order = {f.order_index: f.coeffs for f in fields}
    for m, c in by_order.items():
        if c.shape != (h, w):
            raise DataError(f"field order {m} has shape {c.shape}, image is {(h, w)}")
    gain = by_order[3] ** 3 + by_order[2] ** 2 + by_order[1]
    out = arr + gain[None] * arr + by_order[0][None]
    if clamp_output:
        out = np.clip(out, 0.0, 1.0)
    return out


def simulate_item(
    clean: np.ndarray, cfg: SgmConfig, item_index: int
) -> tuple[np.ndarray, list[StripeField]]:
    """Noise one image ((1, H, W) or (H, W)) at a global item index.

    The result depends only on (cfg.seed, item_index), never on call
    order, so batches can be generated in parallel.
    """
    arr = check_images(clean if np.ndim(clean) == 3 else np.asarray(clean)[None])
    if arr.shape[0] != 1:
        raise DataError("simulate_item takes a single image")
    _, h, w = arr.shape
    fields = [
        sample_stripe_field(
            cfg, m, h, w, derive_stream(cfg.seed, NS_STRIPE, item_index * 4 + m)
        )
        for m in ORDERS
    ]
    return apply_sgm(arr, fields, cfg.clamp_output), fields


def simulate_batch(
    cleans: np.ndarray, cfg: SgmConfig, item_offset: int = 0
) -> tuple[np.ndarray, list[list[StripeField]]]:
    """Noise a batch; item k uses global index item_offset + k."""
    arr = check_images(cleans)
    stripy = np.empty_like(arr)
    all_fields = []
    for k in range(arr.shape[0]):
        stripy[k:k + 1], fields = simulate_item(arr[k:k + 1], cfg, item_offset + k)
        all_fields.append(fields)
    return stripy, all_fields
