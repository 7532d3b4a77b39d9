"""Re-evaluate a golden test-vector bundle with this package's torch
implementations. Every operation runs in float64 so disagreement measures
definitional drift, not precision."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from . import tlosses, tmetrics
from .dstv import read_tensor
from .waveops import decompose, hbgm, reconstruct

DEFAULT_RTOL = 1e-4


def _t(arr: np.ndarray) -> torch.Tensor:
    return torch.as_tensor(np.asarray(arr, dtype=np.float64))


def _ssim_params(params: dict) -> tmetrics.SsimParams:
    return tmetrics.SsimParams(
        window_size=int(params.get("window_size", 11)),
        window_sigma=float(params.get("window_sigma", 1.5)),
        c1=float(params.get("c1", 0.01 ** 2)),
        c2=float(params.get("c2", 0.03 ** 2)),
        scales=int(params.get("scales", 5)),
    )


def _weights(params: dict) -> tlosses.LossWeights:
    kw = {}
    for name in ("alpha", "lambda1", "lambda2", "lambda3", "lambda4",
                 "lambda5", "k", "eps_log"):
        if name in params:
            kw[name] = float(params[name])
    return tlosses.LossWeights(**kw)


def evaluate_entry(op: str, inputs: list[np.ndarray], params: dict):
    if op == "grad_v":
        return tlosses.grad_v(_t(inputs[0])).numpy()
    if op == "haar_subband":
        details, approx = decompose(_t(inputs[0])[:, None], int(params["levels"]))
        band = params["band"]
        if band.startswith("A"):
            return approx[:, 0].numpy()
        lv = int(band[1:])
        idx = {"H": 0, "V": 1, "D": 2}[band[0]]
        return details[lv - 1][idx][:, 0].numpy()
    if op == "haar_reconstruct":
        levels = int(params["levels"])
        approx = _t(inputs[0])[:, None]
        details = [tuple(_t(inputs[1 + 3 * i + j])[:, None] for j in range(3))
                   for i in range(levels)]
        return reconstruct(details, approx)[:, 0].numpy()
    if op == "hbgm":
        return hbgm(_t(inputs[0])[:, None], int(params["levels"]))[:, 0].numpy()
    if op == "psnr":
        return tmetrics.psnr(_t(inputs[0]), _t(inputs[1]))
    if op == "ssim":
        return float(tmetrics.ssim(_t(inputs[0]), _t(inputs[1]), _ssim_params(params))[0])
    if op == "ms_ssim":
        return float(tmetrics.ms_ssim(_t(inputs[0]), _t(inputs[1]), _ssim_params(params))[0])
    if op == "mix_distance":
        return float(tmetrics.mix_distance(_t(inputs[0]), _t(inputs[1]),
                                           float(params["alpha"]), _ssim_params(params))[0])
    if op == "loss_cyc_clean":
        return float(tlosses.loss_cyc_clean(_t(inputs[0]), _t(inputs[1]), _weights(params)))
    if op == "loss_cyc_stripe":
        return float(tlosses.loss_cyc_stripe(_t(inputs[0]), _t(inputs[1]), _weights(params)))
    if op == "loss_hbgm":
        return float(tlosses.loss_hbgm(_t(inputs[0]), _t(inputs[1]),
                                       int(params["levels"]), _weights(params)))
    if op == "loss_perceptual":
        ext = tlosses.make_extractor(params["extractor"],
                                     int(params.get("feature_seed", 0)),
                                     dtype=torch.float64)
        return float(tlosses.loss_perceptual(_t(inputs[0]), _t(inputs[1]), ext))
    if op == "loss_identity":
        return float(tlosses.loss_identity(_t(inputs[0]), _t(inputs[1]), _weights(params)))
    if op == "loss_adversarial":
        return float(tlosses.loss_adversarial(_t(inputs[0]), _t(inputs[1]),
                                              _t(inputs[2]), _weights(params)))
    if op == "loss_cross":
        return float(tlosses.loss_cross(float(params["l_h"]), float(params["l_perc"]),
                                        _weights(params)))
    if op == "loss_total":
        return float(tlosses.loss_total(
            float(params["l_adv"]), float(params["l_cyc_s"]), float(params["l_cyc_c"]),
            float(params["l_iden"]), float(params["l_cross"]), _weights(params)))
    raise ValueError(f"unknown bundle op {op!r}")


def parity_check(bundle_dir, rtol: float = DEFAULT_RTOL):
    """Returns (all_ok, [(name, ok, detail), ...])."""
    bdir = Path(bundle_dir)
    manifest = json.loads((bdir / "manifest.json").read_text())
    results = []
    for e in manifest["entries"]:
        name = e["name"]
        try:
            inputs = [read_tensor(bdir / f) for f in e["input_files"]]
            got = evaluate_entry(e["op"], inputs, e["param_map"])
            if "expected_tensor_file" in e:
                exp = read_tensor(bdir / e["expected_tensor_file"]).astype(np.float64)
                scale = max(1.0, float(np.max(np.abs(exp))))
                err = float(np.max(np.abs(np.asarray(got, dtype=np.float64) - exp)))
            else:
                exp = float(e["expected_scalar"])
                scale = max(1.0, abs(exp))
                err = abs(float(got) - exp)
            ok = err <= rtol * scale
            results.append((name, ok, f"err={err:.3g} tol={rtol * scale:.3g}"))
        except Exception as ex:
            results.append((name, False, f"exception: {ex}"))
    return all(ok for _, ok, _ in results), results
