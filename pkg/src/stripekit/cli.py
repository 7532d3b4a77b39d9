"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import StripekitError, UsageError
from .harness import (
    RunConfig,
    export_vectors,
    hbgm_filter_file,
    load_config_file,
    metrics_report_csv,
    psnr_curves_csv,
    simulate_dir,
    verify_bundle,
)
from .imgcore import read_tensor
from .losses import (
    ScoreSet,
    loss_adversarial,
    loss_cross,
    loss_cyc_clean,
    loss_cyc_stripe,
    loss_hbgm,
    loss_identity,
    loss_perceptual,
    loss_total,
    make_extractor,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="stripekit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize stripy/clean pairs from a folder")
    sim.add_argument("input_dir")
    sim.add_argument("output_dir")
    sim.add_argument("--distribution", choices=("gaussian", "uniform"))
    sim.add_argument("--sigma-min", type=float, help="intensity range lower bound")
    sim.add_argument("--sigma-max", type=float, help="intensity range upper bound")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--no-clamp", action="store_true",
                     help="keep values outside [0,1] before quantization")
    sim.add_argument("--dump-fields", action="store_true",
                     help="also write the coefficient fields as DSTV tensors")
    sim.add_argument("--config")

    met = sub.add_parser("metrics", help="PSNR/SSIM/MS-SSIM report for two folders")
    met.add_argument("ref_dir")
    met.add_argument("test_dir")
    met.add_argument("--out", help="CSV path (default: stdout)")

    hb = sub.add_parser("hbgm", help="remove vertical structure from one image")
    hb.add_argument("input")
    hb.add_argument("output")
    hb.add_argument("--levels", type=int)
    hb.add_argument("--dump-subbands", action="store_true")
    hb.add_argument("--config")

    le = sub.add_parser("loss-eval", help="evaluate all training objectives on tensors")
    le.add_argument("--clean", required=True, help="DSTV: clean batch")
    le.add_argument("--clean-cycle", required=True, help="DSTV: round-tripped cleans")
    le.add_argument("--stripy", required=True, help="DSTV: stripy batch")
    le.add_argument("--stripy-cycle", required=True, help="DSTV: round-tripped stripys")
    le.add_argument("--restored", required=True, help="DSTV: destriped stripys")
    le.add_argument("--identity-out", required=True, help="DSTV: generator(clean)")
    le.add_argument("--d-real", required=True, help="DSTV: discriminator on real cleans")
    le.add_argument("--d-fake-cycle", required=True,
                    help="DSTV: discriminator on generator(simulated stripes)")
    le.add_argument("--d-fake-direct", required=True,
                    help="DSTV: discriminator on generator(real stripes)")
    le.add_argument("--config")

    ev = sub.add_parser("export-vectors", help="write + self-check the golden bundle")
    ev.add_argument("out_dir")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--verify-only", action="store_true",
                    help="only re-verify an existing bundle")

    cv = sub.add_parser("curves", help="per-image PSNR columns across method folders")
    cv.add_argument("ref_dir")
    cv.add_argument("test_dirs", nargs="+")
    cv.add_argument("--out", help="CSV path (default: stdout)")
    return p


def _merged_config(args, flag_map: dict) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = load_config_file(args.config, cfg)
    overrides = {}
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return replace(cfg, **overrides)


def _emit(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_simulate(args) -> int:
    cfg = _merged_config(args, {
        "distribution": "distribution", "sigma_min": "sigma_min",
        "sigma_max": "sigma_max", "seed": "seed",
    })
    cfg = replace(cfg, input_dir=args.input_dir, output_dir=args.output_dir,
                  clamp=cfg.clamp and not args.no_clamp)
    names = simulate_dir(cfg, dump_fields=args.dump_fields)
    print(f"wrote {len(names)} clean/stripy pairs to {cfg.output_dir}")
    return 0


def _cmd_metrics(args) -> int:
    csv, errors = metrics_report_csv(args.ref_dir, args.test_dir)
    _emit(csv, args.out)
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    return 2 if errors else 0


def _cmd_hbgm(args) -> int:
    cfg = _merged_config(args, {"levels": "hbgm_levels"})
    hbgm_filter_file(args.input, args.output, cfg.hbgm_levels, args.dump_subbands)
    return 0


def _cmd_loss_eval(args) -> int:
    cfg = _merged_config(args, {})
    w = cfg.loss_weights()
    clean = read_tensor(args.clean)
    clean_cycle = read_tensor(args.clean_cycle)
    stripy = read_tensor(args.stripy)
    stripy_cycle = read_tensor(args.stripy_cycle)
    restored = read_tensor(args.restored)
    identity_out = read_tensor(args.identity_out)
    scores = ScoreSet(read_tensor(args.d_real), read_tensor(args.d_fake_cycle),
                      read_tensor(args.d_fake_direct))
    extractor = make_extractor(cfg.extractor, cfg.seed)
    l_cyc_c = loss_cyc_clean(clean, clean_cycle, w)
    l_cyc_s = loss_cyc_stripe(stripy, stripy_cycle, w)
    l_h = loss_hbgm(stripy, restored, cfg.hbgm_levels, w)
    l_perc = loss_perceptual(stripy, restored, extractor)
    l_iden = loss_identity(clean, identity_out, w)
    l_adv = loss_adversarial(scores, w)
    l_x = loss_cross(l_h, l_perc, w)
    l_tot = loss_total(l_adv, l_cyc_s, l_cyc_c, l_iden, l_x, w)
    report = {
        "cyc_c": l_cyc_c, "cyc_s": l_cyc_s, "l_h": l_h, "l_perc": l_perc,
        "l_iden": l_iden, "l_adv": l_adv, "l_cross": l_x, "l_total": l_tot,
    }
    print(json.dumps({k: float(f"{v:.6g}") for k, v in report.items()}))
    return 0


def _cmd_export_vectors(args) -> int:
    if not args.verify_only:
        export_vectors(args.out_dir, args.seed)
    ok, results = verify_bundle(args.out_dir)
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'} {name} ({detail})")
    print(f"{sum(p for _, p, _ in results)}/{len(results)} entries verified")
    return 0 if ok else 2


def _cmd_curves(args) -> int:
    csv, errors = psnr_curves_csv(args.ref_dir, args.test_dirs)
    _emit(csv, args.out)
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    return 2 if errors else 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "metrics": _cmd_metrics,
    "hbgm": _cmd_hbgm,
    "loss-eval": _cmd_loss_eval,
    "export-vectors": _cmd_export_vectors,
    "curves": _cmd_curves,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"stripekit: usage error: {e}", file=sys.stderr)
        return 1
    except StripekitError as e:
        print(f"stripekit: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
