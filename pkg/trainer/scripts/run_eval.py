#!/usr/bin/env python3
"""Evaluate a checkpoint on paired ref/noisy folders (same file names),
optionally cross-checking rows against the reference `stripekit` CLI.

Usage:
    python scripts/run_eval.py CKPT REF_DIR NOISY_DIR OUT_DIR [--crosscheck]
"""

import argparse
import shutil

from destripe_trainer import evaluate_heldout


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("checkpoint")
    ap.add_argument("ref_dir")
    ap.add_argument("noisy_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--crosscheck", action="store_true",
                    help="verify rows against the stripekit metrics CLI")
    args = ap.parse_args()

    cmd = None
    if args.crosscheck:
        exe = shutil.which("stripekit")
        if exe is None:
            raise SystemExit("stripekit CLI not found on PATH for --crosscheck")
        cmd = [exe]
    result = evaluate_heldout(args.checkpoint, args.ref_dir, args.noisy_dir,
                              args.out_dir, crosscheck_cmd=cmd)
    print(f"mean PSNR {result['mean_psnr']:.3f} dB, mean SSIM {result['mean_ssim']:.4f}")
    if result["crosschecked_rows"] is not None:
        print(f"cross-checked {result['crosschecked_rows']} rows against the CLI")
    print(f"per-image CSV: {result['csv']}")


if __name__ == "__main__":
    main()
