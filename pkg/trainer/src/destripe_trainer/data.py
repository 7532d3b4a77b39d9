"""Image folders, deterministic patch sampling, and the in-loop stripe
synthesizer (column-constant polynomial fields; per-item per-order
intensity drawn uniformly, then i.i.d. coefficients)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

IMAGE_SUFFIXES = (".png", ".pgm")

# Philox key namespaces local to the trainer (independent of any producer).
NS_FIELDS = 16
NS_PATCHES = 17
NS_INIT = 18


def stream(seed: int, namespace: int, index: int = 0) -> np.random.Generator:
    key = ((seed & ((1 << 64) - 1)) << 64) | ((namespace & 0xFF) << 56) | index
    return np.random.Generator(np.random.Philox(key=key))


def load_image(path) -> np.ndarray:
    """Grayscale (H, W) float64 in [0, 1] from PNG/PGM."""
    p = Path(path)
    if p.suffix.lower() == ".pgm":
        raw = p.read_bytes()
        pos = 0

        def token():
            nonlocal pos
            while pos < len(raw):
                c = raw[pos:pos + 1]
                if c == b"#":
                    while pos < len(raw) and raw[pos:pos + 1] != b"\n":
                        pos += 1
                elif c.isspace():
                    pos += 1
                else:
                    break
            start = pos
            while pos < len(raw) and not raw[pos:pos + 1].isspace():
                pos += 1
            return raw[start:pos]

        magic = token()
        w, h, maxval = int(token()), int(token()), int(token())
        if magic == b"P5":
            pos += 1  # single whitespace byte after maxval
            dtype = ">u2" if maxval > 255 else "u1"
            need = w * h * (2 if maxval > 255 else 1)
            data = np.frombuffer(raw[pos:pos + need], dtype=dtype).reshape(h, w)
        elif magic == b"P2":
            data = np.array(raw[pos:].split(), dtype=np.uint32)[: w * h].reshape(h, w)
        else:
            raise ValueError(f"{p}: not a PGM")
        return data.astype(np.float64) / maxval
    img = Image.open(p)
    img.load()
    if img.mode == "L":
        return np.asarray(img, dtype=np.float64) / 255.0
    if img.mode in ("I;16", "I;16B", "I;16L", "I"):
        return np.asarray(img, dtype=np.float64) / 65535.0
    if img.mode == "RGB":
        return np.asarray(img, dtype=np.float64).mean(axis=2) / 255.0
    raise ValueError(f"{p}: unsupported mode {img.mode}")


def save_image(arr: np.ndarray, path, bitdepth: int = 16) -> None:
    maxval = (1 << bitdepth) - 1
    q = np.rint(np.clip(arr, 0.0, 1.0) * maxval)
    if bitdepth == 8:
        Image.fromarray(q.astype(np.uint8), mode="L").save(path)
    else:
        Image.fromarray(q.astype(np.uint16)).save(path)


def list_images(dir_path) -> list[Path]:
    d = Path(dir_path)
    return sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


class ImageFolder:
    """All images from a folder, preloaded as float32 arrays."""

    def __init__(self, dir_path):
        self.paths = list_images(dir_path)
        if not self.paths:
            raise ValueError(f"no images in {dir_path}")
        self.images = [load_image(p).astype(np.float32) for p in self.paths]

    def __len__(self):
        return len(self.images)

    def sample_patches(self, rng: np.random.Generator, count: int, size: int) -> torch.Tensor:
        """Random crops with random 90-degree rotation, (count, 1, size, size)."""
        out = np.empty((count, 1, size, size), dtype=np.float32)
        for i in range(count):
            img = self.images[int(rng.integers(len(self.images)))]
            h, w = img.shape
            if h < size or w < size:
                raise ValueError(f"image {h}x{w} smaller than patch size {size}")
            r = int(rng.integers(h - size + 1))
            c = int(rng.integers(w - size + 1))
            patch = img[r:r + size, c:c + size]
            if rng.integers(2):
                patch = np.rot90(patch)
            out[i, 0] = patch
        return torch.from_numpy(out)


# ---------------------------------------------------------------------------
# In-loop stripe synthesis

@dataclass(frozen=True)
class StripeConfig:
    distribution: str = "uniform"
    intensity_min: float = 0.05
    intensity_max: float = 0.1
    clamp_output: bool = True
    seed: int = 0


def stripe_fields(cfg: StripeConfig, h: int, w: int, draw_index: int) -> np.ndarray:
    """Four column-constant coefficient rows (4, W) for orders 0..3."""
    rows = np.empty((4, w))
    for m in range(4):
        g = stream(cfg.seed, NS_FIELDS, draw_index * 4 + m)
        intensity = g.uniform(cfg.intensity_min, cfg.intensity_max)
        if cfg.distribution == "gaussian":
            rows[m] = g.normal(0.0, intensity, w) if intensity > 0 else 0.0
        else:
            rows[m] = g.uniform(-intensity, intensity, w)
    return rows


def add_stripes(clean: torch.Tensor, cfg: StripeConfig, draw_base: int) -> torch.Tensor:
    """Apply per-item polynomial stripe noise to (B, 1, H, W).

    noisy = clean + (F3^3 + F2^2 + F1) * clean + F0, fields column-constant.
    Differentiable with respect to `clean`.
    """
    b, _, h, w = clean.shape
    gains = np.empty((b, 1, 1, w), dtype=np.float64)
    offsets = np.empty((b, 1, 1, w), dtype=np.float64)
    for i in range(b):
        rows = stripe_fields(cfg, h, w, draw_base + i)
        gains[i, 0, 0] = rows[3] ** 3 + rows[2] ** 2 + rows[1]
        offsets[i, 0, 0] = rows[0]
    gains_t = torch.as_tensor(gains, dtype=clean.dtype, device=clean.device)
    offsets_t = torch.as_tensor(offsets, dtype=clean.dtype, device=clean.device)
    noisy = clean + gains_t * clean + offsets_t
    if cfg.clamp_output:
        noisy = torch.clamp(noisy, 0.0, 1.0)
    return noisy
