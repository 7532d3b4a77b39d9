#!/usr/bin/env python3
"""Anti-noise sweep: mean stripy-vs-clean PSNR/SSIM over a grid of stripe
intensities (default up to 0.15, past the simulator's training maximum).

Usage:
    python scripts/intensity_sweep.py clean_dir/ --out sweep.csv
"""

import argparse
import sys

import numpy as np

from stripekit import SgmConfig, load_image, psnr, simulate_item, ssim
from stripekit.harness import list_images

DEFAULT_GRID = (0.025, 0.05, 0.075, 0.1, 0.125, 0.15)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("clean_dir")
    ap.add_argument("--intensities", type=float, nargs="+", default=list(DEFAULT_GRID))
    ap.add_argument("--distribution", default="uniform", choices=("gaussian", "uniform"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args()

    paths = list_images(args.clean_dir)
    if not paths:
        sys.exit(f"no images in {args.clean_dir}")
    cleans = [load_image(p) for p in paths]

    lines = ["intensity,mean_psnr,mean_ssim"]
    for v in args.intensities:
        cfg = SgmConfig(distribution=args.distribution, intensity_min=v,
                        intensity_max=v, seed=args.seed)
        ps, ss = [], []
        for i, clean in enumerate(cleans):
            stripy, _ = simulate_item(clean, cfg, i)
            ps.append(psnr(clean[0], stripy[0]))
            ss.append(ssim(clean[0], stripy[0]))
        lines.append(f"{v},{np.mean(ps):.6f},{np.mean(ss):.6f}")

    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
