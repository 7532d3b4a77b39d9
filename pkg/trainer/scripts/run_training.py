#!/usr/bin/env python3
"""Desk-scale training run.

Usage:
    python scripts/run_training.py CLEAN_DIR STRIPE_DIR OUT_DIR \
        --iterations 300 --batch-size 8 --seed 0
"""

import argparse

from destripe_trainer import TrainConfig, fit
from destripe_trainer.data import StripeConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("clean_dir")
    ap.add_argument("stripe_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--iterations", type=int, default=300)
    ap.add_argument("--batch-size", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--distribution", default="uniform", choices=("gaussian", "uniform"))
    ap.add_argument("--sigma-min", type=float, default=0.05)
    ap.add_argument("--sigma-max", type=float, default=0.1)
    ap.add_argument("--gan-mode", default="nonsaturating",
                    choices=("nonsaturating", "minimax"))
    ap.add_argument("--extractor", default="convstack",
                    choices=("convstack", "identity", "vgg16"))
    ap.add_argument("--eval-every", type=int, default=50)
    args = ap.parse_args()

    cfg = TrainConfig(
        iterations=args.iterations,
        batch_size=args.batch_size,
        sgm=StripeConfig(distribution=args.distribution,
                         intensity_min=args.sigma_min,
                         intensity_max=args.sigma_max,
                         seed=args.seed),
        gan_mode=args.gan_mode,
        extractor=args.extractor,
        eval_every=args.eval_every,
        seed=args.seed,
    )
    result = fit(cfg, args.clean_dir, args.stripe_dir, args.out_dir)
    print(f"best held-out PSNR {result['best_psnr']:.3f} dB "
          f"at iteration {result['best_iteration']}")
    print(f"history: {result['history']}")
    print(f"checkpoint: {result['checkpoint']}")


if __name__ == "__main__":
    main()
