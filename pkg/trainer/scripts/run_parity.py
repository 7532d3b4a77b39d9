#!/usr/bin/env python3
"""Re-evaluate a golden test-vector bundle with the torch stack.

Usage:
    python scripts/run_parity.py BUNDLE_DIR [--rtol 1e-4]
"""

import argparse
import sys

from destripe_trainer import parity_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("bundle_dir")
    ap.add_argument("--rtol", type=float, default=1e-4)
    args = ap.parse_args()
    ok, results = parity_check(args.bundle_dir, args.rtol)
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'} {name} ({detail})")
    print(f"{sum(p for _, p, _ in results)}/{len(results)} entries within {args.rtol}")
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
