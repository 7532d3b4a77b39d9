#!/usr/bin/env python3
"""Synthesize a small demo dataset: structured grayscale scenes plus their
striped counterparts, ready for the CLI and for desk-scale training runs.

Usage:
    python scripts/make_demo_dataset.py out/ --count 60 --size 96 --seed 0
"""

import argparse
from pathlib import Path

import numpy as np

from stripekit import SgmConfig, save_image, simulate_item


def synth_scene(rng, h, w):
    """Blobby scene with edges and a gradient; values well inside [0, 1]."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = 0.25 + 0.3 * (xx / w) + 0.15 * np.sin(2 * np.pi * yy / (h / 3.0))
    for _ in range(rng.integers(3, 7)):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        r = rng.uniform(h / 12, h / 4)
        amp = rng.uniform(-0.3, 0.4)
        img += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
    for _ in range(rng.integers(1, 4)):  # hard-edged rectangles
        r0, c0 = rng.integers(0, h - 8), rng.integers(0, w - 8)
        r1, c1 = rng.integers(r0 + 4, h), rng.integers(c0 + 4, w)
        img[r0:r1, c0:c1] += rng.uniform(-0.2, 0.25)
    img += rng.normal(0, 0.01, (h, w))
    lo, hi = img.min(), img.max()
    return 0.05 + 0.9 * (img - lo) / (hi - lo)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir")
    ap.add_argument("--count", type=int, default=60)
    ap.add_argument("--size", type=int, default=96)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--distribution", default="uniform", choices=("gaussian", "uniform"))
    ap.add_argument("--sigma-min", type=float, default=0.05)
    ap.add_argument("--sigma-max", type=float, default=0.1)
    args = ap.parse_args()

    out = Path(args.out_dir)
    clean_dir = out / "clean"
    stripe_dir = out / "stripy"
    clean_dir.mkdir(parents=True, exist_ok=True)
    stripe_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(args.seed)
    cfg = SgmConfig(distribution=args.distribution, intensity_min=args.sigma_min,
                    intensity_max=args.sigma_max, seed=args.seed)
    for i in range(args.count):
        scene = synth_scene(rng, args.size, args.size)[None]
        save_image(scene, clean_dir / f"scene{i:04d}.png", bitdepth=16)
        stripy, _ = simulate_item(scene, cfg, i)
        save_image(stripy, stripe_dir / f"scene{i:04d}.png", bitdepth=16)
    print(f"wrote {args.count} clean + stripy scenes under {out}")


if __name__ == "__main__":
    main()
