"""Network blocks: densely connected residual blocks, triplet attention,
group fusion skips, the 7-stage wavelet U-Net generator (3 encode stages,
4 reconstruction stages, Haar transforms as the samplers), and the
multiscale patch discriminator."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .waveops import haar_down, haar_up


@dataclass(frozen=True)
class MwunetConfig:
    base_channels: int = 16
    dcr_growth: int = 8
    dcr_layers: int = 3
    gfb_kernel_sizes: tuple[int, ...] = (1, 3, 5, 7)
    use_attention: bool = True
    haar_levels: int = 3  # sampler depth; spatial dims must divide 2**levels


@dataclass(frozen=True)
class DiscriminatorConfig:
    scales: int = 2
    base_channels: int = 16
    convs_per_scale: int = 5


class DcrBlock(nn.Module):
    """Dense intra-block connectivity, residual output add. The final
    fusion conv is zero-initialized so the block starts as identity."""

    def __init__(self, channels: int, growth: int = 8, layers: int = 3):
        super().__init__()
        self.hidden = nn.ModuleList([
            nn.Conv2d(channels + i * growth, growth, 3, padding=1)
            for i in range(layers - 1)
        ])
        self.fuse = nn.Conv2d(channels + (layers - 1) * growth, channels, 3, padding=1)
        nn.init.zeros_(self.fuse.weight)
        nn.init.zeros_(self.fuse.bias)

    def forward(self, x):
        feats = [x]
        for conv in self.hidden:
            feats.append(F.relu(conv(torch.cat(feats, dim=1))))
        return x + self.fuse(torch.cat(feats, dim=1))


def _zpool(x):
    return torch.cat([x.max(dim=1, keepdim=True).values,
                      x.mean(dim=1, keepdim=True)], dim=1)


class TripletAttention(nn.Module):
    """Three rotated branches of cross-dimension gating, averaged. Each
    branch gates with a sigmoid in (0, 1), so per-branch magnitudes never
    exceed the input's."""

    def __init__(self, kernel: int = 7):
        super().__init__()
        pad = kernel // 2
        self.conv_hw = nn.Conv2d(2, 1, kernel, padding=pad)
        self.conv_cw = nn.Conv2d(2, 1, kernel, padding=pad)
        self.conv_ch = nn.Conv2d(2, 1, kernel, padding=pad)

    def forward(self, x):
        if x.ndim != 4:
            raise ValueError(f"expected a 4-D feature tensor, got {tuple(x.shape)}")
        b1 = x * torch.sigmoid(self.conv_hw(_zpool(x)))
        t2 = x.permute(0, 2, 1, 3)  # (B, H, C, W)
        b2 = (t2 * torch.sigmoid(self.conv_cw(_zpool(t2)))).permute(0, 2, 1, 3)
        t3 = x.permute(0, 3, 2, 1)  # (B, W, H, C)
        b3 = (t3 * torch.sigmoid(self.conv_ch(_zpool(t3)))).permute(0, 3, 2, 1)
        return (b1 + b2 + b3) / 3.0


class GroupFusion(nn.Module):
    """Skip-connection fusion of a fine (skip) map with a coarser decoder
    map. Both are standardized to the skip's size/width (strided conv on
    the finer path, bilinear interpolation + 1x1 on the coarser), split
    into 4 channel groups each (8 blocks), paired positionally into 4
    fusion features, convolved with distinct kernel sizes in ascending
    order, passed through triplet attention, then concatenated and
    compressed 1x1 back to the skip width.

    `use_attention=False` bypasses the attention modules exactly.
    """

    def __init__(self, skip_ch: int, coarse_ch: int,
                 kernels: tuple[int, ...] = (1, 3, 5, 7), use_attention: bool = True,
                 fine_stride: int = 1):
        super().__init__()
        if skip_ch % 4:
            raise ValueError(f"skip width {skip_ch} not divisible into 4 groups")
        if len(kernels) != 4:
            raise ValueError("need exactly 4 fusion kernel sizes")
        self.use_attention = use_attention
        self.group = skip_ch // 4
        self.fine_conv = nn.Conv2d(skip_ch, skip_ch, 3, padding=1, stride=fine_stride)
        self.coarse_proj = nn.Conv2d(coarse_ch, skip_ch, 1)
        pair_ch = 2 * self.group
        self.fusion = nn.ModuleList([
            nn.Conv2d(pair_ch, pair_ch, k, padding=k // 2) for k in sorted(kernels)
        ])
        self.attention = nn.ModuleList([TripletAttention() for _ in kernels])
        self.compress = nn.Conv2d(4 * pair_ch, skip_ch, 1)

    def forward(self, fine, coarse):
        if fine.shape[-2] % coarse.shape[-2] or fine.shape[-1] % coarse.shape[-1]:
            raise ValueError(
                f"incompatible level pairing: {tuple(fine.shape)} vs {tuple(coarse.shape)}")
        f = self.fine_conv(fine)
        c = F.interpolate(coarse, size=f.shape[-2:], mode="bilinear",
                          align_corners=False)
        c = self.coarse_proj(c)
        outs = []
        for i, (conv, attn) in enumerate(zip(self.fusion, self.attention)):
            g0, g1 = i * self.group, (i + 1) * self.group
            fused = conv(torch.cat([f[:, g0:g1], c[:, g0:g1]], dim=1))
            outs.append(attn(fused) if self.use_attention else fused)
        return self.compress(torch.cat(outs, dim=1))


class _Down(nn.Module):
    """Haar downsample then channel compression 4C -> 2C."""

    def __init__(self, ch_in):
        super().__init__()
        self.proj = nn.Conv2d(4 * ch_in, 2 * ch_in, 1)

    def forward(self, x):
        return self.proj(haar_down(x))


class _Up(nn.Module):
    """Channel expansion C -> 2C (= 4 * C/2) then Haar upsample to C/2."""

    def __init__(self, ch_in):
        super().__init__()
        self.proj = nn.Conv2d(ch_in, 2 * ch_in, 1)

    def forward(self, x):
        return haar_up(self.proj(x))


class MWUNet(nn.Module):
    """7-stage wavelet U-Net generator. Residual head: a zero-initialized
    conv + tanh produces a [-1, 1] residual that is added to the input and
    clamped to [0, 1], so the network is the identity at initialization."""

    def __init__(self, cfg: MwunetConfig = MwunetConfig()):
        super().__init__()
        self.cfg = cfg
        c = cfg.base_channels
        g, nl, ks, att = cfg.dcr_growth, cfg.dcr_layers, cfg.gfb_kernel_sizes, cfg.use_attention
        self.in_conv = nn.Conv2d(1, c, 3, padding=1)
        self.stage1 = DcrBlock(c, g, nl)
        self.down1 = _Down(c)
        self.stage2 = DcrBlock(2 * c, g, nl)
        self.down2 = _Down(2 * c)
        self.stage3 = DcrBlock(4 * c, g, nl)
        self.down3 = _Down(4 * c)
        self.stage4 = DcrBlock(8 * c, g, nl)  # bottleneck, first decode stage
        self.up1 = _Up(8 * c)
        self.gfb1 = GroupFusion(4 * c, 8 * c, ks, att)
        self.merge1 = nn.Conv2d(8 * c, 4 * c, 1)
        self.stage5 = DcrBlock(4 * c, g, nl)
        self.up2 = _Up(4 * c)
        self.gfb2 = GroupFusion(2 * c, 4 * c, ks, att)
        self.merge2 = nn.Conv2d(4 * c, 2 * c, 1)
        self.stage6 = DcrBlock(2 * c, g, nl)
        self.up3 = _Up(2 * c)
        self.gfb3 = GroupFusion(c, 2 * c, ks, att)
        self.merge3 = nn.Conv2d(2 * c, c, 1)
        self.stage7 = DcrBlock(c, g, nl)
        self.out_conv = nn.Conv2d(c, 1, 3, padding=1)
        nn.init.zeros_(self.out_conv.weight)
        nn.init.zeros_(self.out_conv.bias)

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != 1:
            raise ValueError(f"expected (B, 1, H, W), got {tuple(x.shape)}")
        div = 1 << self.cfg.haar_levels
        if x.shape[-2] % div or x.shape[-1] % div:
            raise ValueError(f"spatial dims must divide {div}, got {tuple(x.shape[-2:])}")
        e1 = self.stage1(self.in_conv(x))
        e2 = self.stage2(self.down1(e1))
        e3 = self.stage3(self.down2(e2))
        d4 = self.stage4(self.down3(e3))
        d5 = self.stage5(self.merge1(torch.cat([self.up1(d4), self.gfb1(e3, d4)], dim=1)))
        d6 = self.stage6(self.merge2(torch.cat([self.up2(d5), self.gfb2(e2, d5)], dim=1)))
        d7 = self.stage7(self.merge3(torch.cat([self.up3(d6), self.gfb3(e1, d6)], dim=1)))
        residual = torch.tanh(self.out_conv(d7))
        return torch.clamp(x + residual, 0.0, 1.0)


class _ScaleHead(nn.Module):
    def __init__(self, base: int, convs: int):
        super().__init__()
        chans = [1, base, 2 * base, 2 * base, base, 1][: convs + 1]
        layers = []
        for i, (cin, cout) in enumerate(zip(chans[:-1], chans[1:])):
            stride = 2 if i < 2 else 1
            layers.append(nn.Conv2d(cin, cout, 3, padding=1, stride=stride))
            if i < convs - 1:
                layers.append(nn.LeakyReLU(0.2))
        self.body = nn.Sequential(*layers)

    def forward(self, x):
        return torch.sigmoid(self.body(x))


class MultiScaleDiscriminator(nn.Module):
    """Patch discriminator applied at progressively halved resolutions;
    every output is a sigmoid probability map in (0, 1)."""

    def __init__(self, cfg: DiscriminatorConfig = DiscriminatorConfig()):
        super().__init__()
        self.heads = nn.ModuleList(
            [_ScaleHead(cfg.base_channels, cfg.convs_per_scale) for _ in range(cfg.scales)]
        )

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != 1:
            raise ValueError(f"expected (B, 1, H, W), got {tuple(x.shape)}")
        outs = []
        cur = x
        for head in self.heads:
            outs.append(head(cur))
            cur = F.avg_pool2d(cur, 2)
        return outs
