"""Torch training objectives, definitionally identical to the reference
oracles (batch means; gradients remapped by (g+1)/2; background-guidance
outputs remapped by a shared min/max; natural-log adversarial terms with
eps clamping)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .tmetrics import DEFAULT_PARAMS, SsimParams, mix_distance
from .waveops import hbgm


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


def grad_v(x: torch.Tensor) -> torch.Tensor:
    """Vertical forward difference on (B, 1, H, W) or (B, H, W)."""
    if x.shape[-2] < 2:
        raise ValueError("need height >= 2")
    return x[..., 1:, :] - x[..., :-1, :]


def loss_cyc_clean(clean, cycled, w: LossWeights, p: SsimParams = DEFAULT_PARAMS):
    return mix_distance(clean, cycled, w.alpha, p).mean()


def loss_cyc_stripe(stripy, cycled, w: LossWeights, p: SsimParams = DEFAULT_PARAMS):
    g1 = (grad_v(stripy) + 1.0) / 2.0
    g2 = (grad_v(cycled) + 1.0) / 2.0
    return mix_distance(g1, g2, w.alpha, p).mean()


def loss_hbgm(stripy, restored, levels: int, w: LossWeights,
              p: SsimParams = DEFAULT_PARAMS):
    h1 = hbgm(_b1hw(stripy), levels)
    h2 = hbgm(_b1hw(restored), levels)
    lo = torch.minimum(h1.min(), h2.min())
    hi = torch.maximum(h1.max(), h2.max())
    span = hi - lo
    if float(span.detach()) <= 0.0:
        h1 = torch.zeros_like(h1)
        h2 = torch.zeros_like(h2)
    else:
        h1 = (h1 - lo) / span
        h2 = (h2 - lo) / span
    return mix_distance(h1, h2, w.alpha, p).mean()


def loss_perceptual(stripy, restored, extractor):
    fa = extractor(_b1hw(stripy))
    fb = extractor(_b1hw(restored))
    return torch.mean((fa - fb) ** 2)


def loss_identity(clean, generated, w: LossWeights, p: SsimParams = DEFAULT_PARAMS):
    return loss_cyc_clean(clean, generated, w, p)


def loss_adversarial(d_real, d_fake_cycle, d_fake_direct, w: LossWeights):
    eps = w.eps_log
    return (torch.log(d_real.clamp(eps, 1 - eps)).mean()
            + torch.log((1 - d_fake_cycle).clamp(eps, 1 - eps)).mean()
            + torch.log((1 - d_fake_direct).clamp(eps, 1 - eps)).mean())


def loss_cross(l_h, l_perc, w: LossWeights):
    return l_h + w.k * l_perc


def loss_total(l_adv, l_cyc_s, l_cyc_c, l_iden, l_cross, w: LossWeights):
    return (w.lambda1 * l_adv + w.lambda2 * l_cyc_s + w.lambda3 * l_cyc_c
            + w.lambda4 * l_iden + w.lambda5 * l_cross)


def _b1hw(x: torch.Tensor) -> torch.Tensor:
    return x[:, None] if x.ndim == 3 else x


# ---------------------------------------------------------------------------
# Feature extractors

class IdentityFeatures(torch.nn.Module):
    name = "identity"

    def forward(self, x):
        return _b1hw(x)


class SeededConvStack(torch.nn.Module):
    """The deterministic random-weight conv stack, rebuilt from its spec:
    weights N(0, 1/sqrt(fan_in)) drawn layer-by-layer in C-order from the
    Philox stream keyed (seed << 64) | (1 << 56), channels 1->8->8->8,
    3x3 kernels, zero padding 1, tanh between layers, no bias."""

    name = "convstack"
    channels = (1, 8, 8, 8)
    ksize = 3

    def __init__(self, seed: int = 0, dtype=torch.float32):
        super().__init__()
        key = ((seed & ((1 << 64) - 1)) << 64) | (1 << 56)
        stream = np.random.Generator(np.random.Philox(key=key))
        self.convs = torch.nn.ModuleList()
        for cin, cout in zip(self.channels[:-1], self.channels[1:]):
            std = 1.0 / np.sqrt(cin * self.ksize * self.ksize)
            w = stream.normal(0.0, std, size=(cout, cin, self.ksize, self.ksize))
            conv = torch.nn.Conv2d(cin, cout, self.ksize, padding=1, bias=False)
            conv.weight.data = torch.as_tensor(w, dtype=dtype)
            conv.weight.requires_grad_(False)
            self.convs.append(conv)

    def forward(self, x):
        f = _b1hw(x)
        for i, conv in enumerate(self.convs):
            f = conv(f)
            if i < len(self.convs) - 1:
                f = torch.tanh(f)
        return f


class Vgg16Features(torch.nn.Module):
    """Pretrained deep extractor (conv2_3-style depth). Requires
    torchvision weights on disk; unavailable in offline environments."""

    name = "vgg16"

    def __init__(self):
        super().__init__()
        try:
            from torchvision.models import vgg16, VGG16_Weights
            net = vgg16(weights=VGG16_Weights.IMAGENET1K_V1)
        except Exception as e:  # no torchvision or no cached weights
            raise RuntimeError(
                "pretrained vgg16 weights are unavailable; use the "
                "'convstack' or 'identity' extractor instead"
            ) from e
        self.features = net.features[:9].eval()  # through conv2_2+relu block
        for p in self.features.parameters():
            p.requires_grad_(False)

    def forward(self, x):
        return self.features(_b1hw(x).repeat(1, 3, 1, 1))


def make_extractor(name: str, seed: int = 0, dtype=torch.float32):
    if name == "identity":
        return IdentityFeatures()
    if name == "convstack":
        return SeededConvStack(seed, dtype=dtype)
    if name == "vgg16":
        return Vgg16Features()
    raise ValueError(f"unknown extractor {name!r}")
