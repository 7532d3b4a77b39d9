"""Reference evaluators for every training objective.

These are the oracles the neural trainer must agree with: pure functions
of batches, no state beyond immutable configs. All losses reduce by batch
mean. Inputs that do not naturally live in [0, 1] are affinely remapped
before MS-SSIM (whose constants assume unit dynamic range): vertical
gradients via (g + 1)/2, background-guidance outputs via a min/max shared
across both tensors and the whole batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError
from .imgcore import check_images, grad_v
from .metrics import DEFAULT_PARAMS, SsimParams, mix_distance
from .rng import NS_FEATURES, derive_stream
from .wavelet import hbgm


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.84
    lambda1: float = 1.0
    lambda2: float = 100.0
    lambda3: float = 10.0
    lambda4: float = 10.0
    lambda5: float = 10.0
    k: float = 0.001
    eps_log: float = 1e-7

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DataError(f"alpha must be in [0, 1], got {self.alpha}")
        for name in ("lambda1", "lambda2", "lambda3", "lambda4", "lambda5", "k"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be >= 0")
        if not 0.0 < self.eps_log <= 1e-3:
            raise DataError(f"eps_log must be in (0, 1e-3], got {self.eps_log}")


# ---------------------------------------------------------------------------
# Feature extractors (deterministic stand-ins for a pretrained network)

class IdentityFeatures:
    """Features are the pixels themselves, shaped (B, 1, H, W)."""

    name = "identity"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return check_images(x)[:, None, :, :]


class SeededConvStack:
    """Fixed random-weight conv stack; deterministic given the seed.

    Three 3x3 cross-correlation layers (channels 1 -> 8 -> 8 -> 8), zero
    padding 1 so feature dims equal image dims, tanh between layers, no
    bias. Weights are N(0, 1/sqrt(fan_in)), drawn layer by layer in C-order
    from the seed's feature stream, so any implementation can rebuild them.
    """

    name = "convstack"
    channels = (1, 8, 8, 8)
    ksize = 3

    def __init__(self, seed: int = 0):
        self.seed = seed
        stream = derive_stream(seed, NS_FEATURES, 0)
        self.weights = []
        for cin, cout in zip(self.channels[:-1], self.channels[1:]):
            std = 1.0 / np.sqrt(cin * self.ksize * self.ksize)
            self.weights.append(
                stream.normal(0.0, std, size=(cout, cin, self.ksize, self.ksize))
            )

    @staticmethod
    def _conv2d_same(x: np.ndarray, w: np.ndarray) -> np.ndarray:
        # x (B, C, H, W), w (O, C, k, k); zero pad; cross-correlation.
        k = w.shape[-1]
        p = k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        v = sliding_window_view(xp, (k, k), axis=(2, 3))
        return np.einsum("bchwij,ocij->bohw", v, w, optimize=True)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        f = check_images(x)[:, None, :, :]
        for i, w in enumerate(self.weights):
            f = self._conv2d_same(f, w)
            if i < len(self.weights) - 1:
                f = np.tanh(f)
        return f


def make_extractor(name: str, seed: int = 0):
    if name == "identity":
        return IdentityFeatures()
    if name == "convstack":
        return SeededConvStack(seed)
    raise DataError(f"unknown feature extractor {name!r}")


# ---------------------------------------------------------------------------
# Score container for the adversarial objective

@dataclass(frozen=True)
class ScoreSet:
    """Discriminator probability maps for the three adversarial terms."""

    d_real: np.ndarray         # D(real clean)
    d_fake_cycle: np.ndarray   # D(G(simulated stripy))
    d_fake_direct: np.ndarray  # D(G(real stripy))

    def __post_init__(self):
        for name in ("d_real", "d_fake_cycle", "d_fake_direct"):
            s = np.asarray(getattr(self, name), dtype=np.float64)
            if s.size == 0:
                raise DataError(f"{name} is empty")
            if not np.isfinite(s).all() or s.min() < 0.0 or s.max() > 1.0:
                raise DataError(f"{name} has values outside [0, 1]")


# ---------------------------------------------------------------------------
# Loss evaluators

def _batch_mix(x: np.ndarray, y: np.ndarray, alpha: float, params: SsimParams) -> float:
    if x.shape != y.shape:
        raise DataError(f"batch dims differ: {x.shape} vs {y.shape}")
    return float(np.mean([mix_distance(x[k], y[k], alpha, params) for k in range(x.shape[0])]))


def loss_cyc_clean(
    clean: np.ndarray, clean_cycled: np.ndarray, w: LossWeights,
    params: SsimParams = DEFAULT_PARAMS,
) -> float:
    """Clean-domain cycle consistency: mixed distance on the images."""
    return _batch_mix(check_images(clean), check_images(clean_cycled), w.alpha, params)


def loss_cyc_stripe(
    stripy: np.ndarray, stripy_cycled: np.ndarray, w: LossWeights,
    params: SsimParams = DEFAULT_PARAMS,
) -> float:
    """Stripe-domain cycle consistency on vertical gradients.

    Gradients live in [-1, 1]; they are remapped by (g + 1)/2 before the
    metric. Adding any column-constant field to either side leaves the
    loss at zero.
    """
    g1 = (grad_v(stripy) + 1.0) / 2.0
    g2 = (grad_v(stripy_cycled) + 1.0) / 2.0
    return _batch_mix(g1, g2, w.alpha, params)


def loss_hbgm(
    stripy: np.ndarray, restored: np.ndarray, levels: int, w: LossWeights,
    params: SsimParams = DEFAULT_PARAMS,
) -> float:
    """Background-content constraint through the Haar guidance filter."""
    h1 = hbgm(check_images(stripy), levels)
    h2 = hbgm(check_images(restored), levels)
    lo = min(h1.min(), h2.min())
    hi = max(h1.max(), h2.max())
    span = hi - lo
    if span <= 0.0:
        h1 = np.zeros_like(h1)
        h2 = np.zeros_like(h2)
    else:
        h1 = (h1 - lo) / span
        h2 = (h2 - lo) / span
    return _batch_mix(h1, h2, w.alpha, params)


def loss_perceptual(stripy: np.ndarray, restored: np.ndarray, extractor) -> float:
    """Mean squared distance in feature space (element-count normalized)."""
    fa = extractor(check_images(stripy))
    fb = extractor(check_images(restored))
    if fa.shape != fb.shape:
        raise DataError(f"feature dims differ: {fa.shape} vs {fb.shape}")
    return float(np.mean((fa - fb) ** 2))


def loss_identity(
    clean: np.ndarray, generated_from_clean: np.ndarray, w: LossWeights,
    params: SsimParams = DEFAULT_PARAMS,
) -> float:
    """Identity constraint: the generator should not disturb clean input."""
    return loss_cyc_clean(clean, generated_from_clean, w, params)


def loss_adversarial(scores: ScoreSet, w: LossWeights) -> float:
    """log D(real) + log(1 - D(fake)) terms, natural log, eps-clamped.

    Returned from the discriminator's viewpoint (it maximizes this); the
    trainer negates / splits the terms as needed.
    """
    eps = w.eps_log

    def term(s: np.ndarray, flip: bool) -> float:
        p = np.clip(np.asarray(s, dtype=np.float64), eps, 1.0 - eps)
        return float(np.mean(np.log(1.0 - p if flip else p)))

    return (
        term(scores.d_real, flip=False)
        + term(scores.d_fake_cycle, flip=True)
        + term(scores.d_fake_direct, flip=True)
    )


def loss_cross(l_h: float, l_perc: float, w: LossWeights) -> float:
    """Combined cross-domain term: l_h + k * l_perc."""
    return l_h + w.k * l_perc


def loss_total(
    l_adv: float, l_cyc_s: float, l_cyc_c: float, l_iden: float, l_cross: float,
    w: LossWeights,
) -> float:
    """Weighted sum of the five objectives."""
    return (
        w.lambda1 * l_adv
        + w.lambda2 * l_cyc_s
        + w.lambda3 * l_cyc_c
        + w.lambda4 * l_iden
        + w.lambda5 * l_cross
    )
