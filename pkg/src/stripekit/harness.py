"""Dataset/evaluation pipeline behind the CLI: folder noise synthesis,
metric reports, background-guidance filtering, and the golden test-vector
bundle used for cross-component parity."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, fields as dc_fields, replace
from pathlib import Path

import numpy as np

from .errors import DataError, UsageError
from .imgcore import (
    IMAGE_SUFFIXES,
    grad_v,
    load_image,
    read_tensor,
    save_image,
    write_tensor,
)
from .losses import (
    LossWeights,
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
from .metrics import SsimParams, mix_distance, ms_ssim, psnr, ssim
from .rng import NS_BUNDLE, derive_stream
from .stripegen import SgmConfig, simulate_item
from .wavelet import haar_decompose, haar_reconstruct, hbgm, LevelBands, WaveletPyramid

BUNDLE_VERSION = 1
BUNDLE_RTOL = 1e-6


# ---------------------------------------------------------------------------
# Run configuration (shared key=value config dialect)

@dataclass(frozen=True)
class RunConfig:
    input_dir: str = ""
    output_dir: str = ""
    distribution: str = "gaussian"
    sigma_min: float = 0.02
    sigma_max: float = 0.12
    clamp: bool = True
    seed: int = 0
    patch_size: int = 64
    patch_stride: int = 64
    hbgm_levels: int = 3
    alpha: float = 0.84
    lambda1: float = 1.0
    lambda2: float = 100.0
    lambda3: float = 10.0
    lambda4: float = 10.0
    lambda5: float = 10.0
    k: float = 0.001
    extractor: str = "identity"

    def sgm_config(self) -> SgmConfig:
        return SgmConfig(
            distribution=self.distribution,
            intensity_min=self.sigma_min,
            intensity_max=self.sigma_max,
            clamp_output=self.clamp,
            seed=self.seed,
        )

    def loss_weights(self) -> LossWeights:
        return LossWeights(
            alpha=self.alpha,
            lambda1=self.lambda1, lambda2=self.lambda2, lambda3=self.lambda3,
            lambda4=self.lambda4, lambda5=self.lambda5, k=self.k,
        )


def _parse_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {s!r}")


def load_config_file(path, base: RunConfig | None = None) -> RunConfig:
    """Strict key=value config: unknown keys are usage errors."""
    cfg = base or RunConfig()
    types = {f.name: f.type for f in dc_fields(RunConfig)}
    casts = {"str": str, "float": float, "int": int, "bool": _parse_bool}
    updates = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from e
    for ln, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in types:
            raise UsageError(f"{path}:{ln}: unknown config key {key!r}")
        try:
            updates[key] = casts[types[key]](value)
        except ValueError as e:
            raise UsageError(f"{path}:{ln}: bad value for {key}: {e}") from e
    return replace(cfg, **updates)


# ---------------------------------------------------------------------------
# Folder simulation

def list_images(dir_path) -> list[Path]:
    d = Path(dir_path)
    if not d.is_dir():
        raise DataError(f"not a directory: {d}")
    return sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def simulate_dir(cfg: RunConfig, dump_fields: bool = False) -> list[str]:
    """Noise every image in input_dir; write clean/stripy pairs + manifest.

    Per-image randomness is keyed by the image's position in sorted order,
    so outputs are reproducible regardless of processing order. With
    dump_fields, the four coefficient fields are also written per image as
    a (4, H, W) DSTV tensor for inspection.
    """
    paths = list_images(cfg.input_dir)
    if not paths:
        raise DataError(f"no images found in {cfg.input_dir}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    sgm = cfg.sgm_config()
    rows = ["name,intensity0,intensity1,intensity2,intensity3"]
    written = []
    for index, path in enumerate(paths):
        clean = load_image(path)
        stripy, fields = simulate_item(clean, sgm, index)
        stem = path.stem
        save_image(clean, out / f"{stem}_clean.png")
        save_image(stripy, out / f"{stem}_stripy.png")
        by_order = sorted(fields, key=lambda f: f.order_index)
        if dump_fields:
            write_tensor(out / f"{stem}_fields.dstv",
                         np.stack([f.coeffs for f in by_order]))
        rows.append(
            f"{stem}," + ",".join(f"{f.intensity:.6f}" for f in by_order)
        )
        written.append(stem)
    (out / "manifest.csv").write_text("\n".join(rows) + "\n")
    return written


# ---------------------------------------------------------------------------
# Metric reports

def _fmt(v: float) -> str:
    return "inf" if np.isinf(v) else f"{v:.6f}"


def metrics_rows(ref_dir, test_dir, params: SsimParams | None = None):
    """Per-image (name, psnr, ssim, ms_ssim) rows + list of per-file errors."""
    params = params or SsimParams()
    refs = {p.name: p for p in list_images(ref_dir)}
    tests = {p.name: p for p in list_images(test_dir)}
    rows, errors = [], []
    for name in sorted(refs):
        if name not in tests:
            errors.append(f"{name}: missing from {test_dir}")
            continue
        a = load_image(refs[name])[0]
        b = load_image(tests[name])[0]
        if a.shape != b.shape:
            errors.append(f"{name}: dims {a.shape} vs {b.shape}")
            continue
        rows.append((name, psnr(a, b), ssim(a, b, params), ms_ssim(a, b, params)))
    for name in sorted(set(tests) - set(refs)):
        errors.append(f"{name}: missing from {ref_dir}")
    return rows, errors


def metrics_report_csv(ref_dir, test_dir, params: SsimParams | None = None):
    rows, errors = metrics_rows(ref_dir, test_dir, params)
    lines = ["name,psnr,ssim,ms_ssim"]
    for name, p, s, m in rows:
        lines.append(f"{name},{_fmt(p)},{_fmt(s)},{_fmt(m)}")
    if rows:
        mp = float(np.mean([r[1] for r in rows]))
        mss = float(np.mean([r[2] for r in rows]))
        mms = float(np.mean([r[3] for r in rows]))
        lines.append(f"mean,{_fmt(mp)},{_fmt(mss)},{_fmt(mms)}")
    return "\n".join(lines) + "\n", errors


def psnr_curves_csv(ref_dir, test_dirs: list[str]):
    """One row per image, one PSNR column per test dir (argument order)."""
    refs = {p.name: p for p in list_images(ref_dir)}
    methods = [Path(d).name for d in test_dirs]
    lines = ["name," + ",".join(methods)]
    errors = []
    for name in sorted(refs):
        a = load_image(refs[name])[0]
        cols = []
        for d in test_dirs:
            candidate = Path(d) / name
            if not candidate.exists():
                errors.append(f"{name}: missing from {d}")
                cols.append("")
                continue
            b = load_image(candidate)[0]
            if a.shape != b.shape:
                errors.append(f"{name}: dims {a.shape} vs {b.shape} in {d}")
                cols.append("")
                continue
            cols.append(_fmt(psnr(a, b)))
        lines.append(f"{name}," + ",".join(cols))
    return "\n".join(lines) + "\n", errors


# ---------------------------------------------------------------------------
# Background-guidance filtering

def crop_divisible(x: np.ndarray, levels: int):
    """Center-crop (B, H, W) to dims divisible by 2^levels."""
    _, h, w = x.shape
    div = 1 << levels
    h2, w2 = (h // div) * div, (w // div) * div
    if h2 < div or w2 < div:
        raise DataError(f"image {h}x{w} too small for {levels} levels")
    r = (h - h2) // 2
    c = (w - w2) // 2
    cropped = (h2, w2) != (h, w)
    return x[:, r:r + h2, c:c + w2], cropped


def hbgm_filter_file(in_path, out_path, levels: int, dump_subbands: bool = False,
                     warn=lambda msg: print(msg, file=sys.stderr)):
    """Filter one image file; returns the pre-display HBGM tensor."""
    x = load_image(in_path)
    x, cropped = crop_divisible(x, levels)
    if cropped:
        warn(f"{in_path}: cropped to {x.shape[1]}x{x.shape[2]} (divisibility by 2^{levels})")
    filtered = hbgm(x, levels)
    lo, hi = filtered.min(), filtered.max()
    display = (filtered - lo) / (hi - lo) if hi > lo else np.zeros_like(filtered)
    save_image(display, out_path)
    if dump_subbands:
        sub_dir = Path(out_path).with_suffix("")
        sub_dir = sub_dir.parent / (sub_dir.name + "_subbands")
        sub_dir.mkdir(parents=True, exist_ok=True)
        p = haar_decompose(x, levels)
        write_tensor(sub_dir / f"A_{levels}.dstv", p.approx)
        for i, bands in enumerate(p.details, start=1):
            write_tensor(sub_dir / f"H{i}.dstv", bands.h)
            write_tensor(sub_dir / f"V{i}.dstv", bands.v)
            write_tensor(sub_dir / f"D{i}.dstv", bands.d)
    return filtered


# ---------------------------------------------------------------------------
# Golden test-vector bundle

def _ssim_params_from(params: dict) -> SsimParams:
    return SsimParams(
        window_size=int(params.get("window_size", 11)),
        window_sigma=float(params.get("window_sigma", 1.5)),
        c1=float(params.get("c1", 0.01 ** 2)),
        c2=float(params.get("c2", 0.03 ** 2)),
        scales=int(params.get("scales", 5)),
    )


def _weights_from(params: dict) -> LossWeights:
    kw = {}
    for f in dc_fields(LossWeights):
        if f.name in params:
            kw[f.name] = float(params[f.name])
    return LossWeights(**kw)


def _subband_names(levels: int) -> list[str]:
    names = [f"A{levels}"]
    for i in range(1, levels + 1):
        names += [f"H{i}", f"V{i}", f"D{i}"]
    return names


def evaluate_entry(op: str, inputs: list[np.ndarray], params: dict):
    """Re-evaluate one bundle entry. Returns a scalar or a tensor."""
    if op == "grad_v":
        return grad_v(inputs[0])
    if op == "haar_subband":
        p = haar_decompose(inputs[0], int(params["levels"]))
        band = params["band"]
        if band.startswith("A"):
            return p.approx
        lv = int(band[1:])
        return getattr(p.details[lv - 1], band[0].lower())
    if op == "haar_reconstruct":
        levels = int(params["levels"])
        approx = inputs[0]
        details = [
            LevelBands(h=inputs[1 + 3 * i], v=inputs[2 + 3 * i], d=inputs[3 + 3 * i])
            for i in range(levels)
        ]
        return haar_reconstruct(WaveletPyramid(details, approx))
    if op == "hbgm":
        return hbgm(inputs[0], int(params["levels"]))
    if op == "psnr":
        return psnr(inputs[0], inputs[1])
    if op == "ssim":
        return ssim(inputs[0], inputs[1], _ssim_params_from(params))
    if op == "ms_ssim":
        return ms_ssim(inputs[0], inputs[1], _ssim_params_from(params))
    if op == "mix_distance":
        return mix_distance(inputs[0], inputs[1], float(params["alpha"]),
                            _ssim_params_from(params))
    if op == "loss_cyc_clean":
        return loss_cyc_clean(inputs[0], inputs[1], _weights_from(params))
    if op == "loss_cyc_stripe":
        return loss_cyc_stripe(inputs[0], inputs[1], _weights_from(params))
    if op == "loss_hbgm":
        return loss_hbgm(inputs[0], inputs[1], int(params["levels"]), _weights_from(params))
    if op == "loss_perceptual":
        ext = make_extractor(params["extractor"], int(params.get("feature_seed", 0)))
        return loss_perceptual(inputs[0], inputs[1], ext)
    if op == "loss_identity":
        return loss_identity(inputs[0], inputs[1], _weights_from(params))
    if op == "loss_adversarial":
        return loss_adversarial(ScoreSet(inputs[0], inputs[1], inputs[2]),
                                _weights_from(params))
    if op == "loss_cross":
        return loss_cross(float(params["l_h"]), float(params["l_perc"]),
                          _weights_from(params))
    if op == "loss_total":
        return loss_total(
            float(params["l_adv"]), float(params["l_cyc_s"]), float(params["l_cyc_c"]),
            float(params["l_iden"]), float(params["l_cross"]), _weights_from(params),
        )
    raise DataError(f"unknown bundle op {op!r}")


def export_vectors(out_dir, seed: int = 0) -> dict:
    """Write pinned inputs + expected outputs for every oracle operation.

    Expected values are computed from the float32 tensors as stored, so a
    verifier that reads the same files reproduces them exactly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stream = derive_stream(seed, NS_BUNDLE, 0)

    def put(name: str, arr: np.ndarray) -> np.ndarray:
        write_tensor(out / name, arr)
        return read_tensor(out / name)  # f32-quantized, the version of record

    put("img_a.dstv", stream.uniform(0.0, 1.0, (1, 64, 64)))
    metric_x = put("metric_x.dstv", stream.uniform(0.0, 1.0, (64, 64)))
    put("metric_y.dstv",
        np.clip(metric_x + stream.normal(0.0, 0.05, (64, 64)), 0.0, 1.0))

    # Smooth-ish clean pair plus a striped twin for the loss entries.
    base = stream.uniform(0.2, 0.8, (2, 64, 64))
    for _ in range(2):  # crude blur to give images structure
        base = (base + np.roll(base, 1, axis=1) + np.roll(base, 1, axis=2)) / 3.0
    clean = put("clean.dstv", np.clip(base, 0.0, 1.0))
    put("clean_cycle.dstv",
        np.clip(clean + stream.normal(0.0, 0.02, clean.shape), 0.0, 1.0))
    sgm = SgmConfig(seed=seed)
    stripy = np.concatenate(
        [simulate_item(clean[k:k + 1], sgm, k)[0] for k in range(clean.shape[0])]
    )
    stripy = put("stripy.dstv", stripy)
    put("stripy_cycle.dstv",
        np.clip(stripy + stream.normal(0.0, 0.02, stripy.shape), 0.0, 1.0))
    put("restored.dstv",
        np.clip(0.5 * (stripy.astype(np.float64) + clean)
                + stream.normal(0.0, 0.01, stripy.shape), 0.0, 1.0))
    put("ident_out.dstv",
        np.clip(clean + stream.normal(0.0, 0.01, clean.shape), 0.0, 1.0))
    put("d_real.dstv", stream.uniform(0.05, 0.95, (2, 6, 6)))
    put("d_fake_cycle.dstv", stream.uniform(0.05, 0.95, (2, 6, 6)))
    put("d_fake_direct.dstv", stream.uniform(0.05, 0.95, (2, 6, 6)))

    w = LossWeights()
    ssim_kw = {"window_size": 11, "window_sigma": 1.5,
               "c1": 0.01 ** 2, "c2": 0.03 ** 2, "scales": 5}
    entries = []

    def add(name: str, op: str, input_files: list[str], params: dict,
            expected_tensor: np.ndarray | None = None):
        inputs = [read_tensor(out / f) for f in input_files]
        value = evaluate_entry(op, inputs, params)
        entry = {"name": name, "op": op, "input_files": input_files,
                 "param_map": params}
        if expected_tensor is not None or isinstance(value, np.ndarray):
            fname = f"expected_{name}.dstv"
            write_tensor(out / fname, value)
            entry["expected_tensor_file"] = fname
        else:
            entry["expected_scalar"] = float(value)
        entries.append(entry)

    add("grad_v", "grad_v", ["img_a.dstv"], {})
    for band in _subband_names(2):
        add(f"haar_{band}", "haar_subband", ["img_a.dstv"],
            {"levels": 2, "band": band})
    add("haar_reconstruct", "haar_reconstruct",
        [f"expected_haar_{b}.dstv" for b in _subband_names(2)], {"levels": 2})
    add("hbgm", "hbgm", ["img_a.dstv"], {"levels": 3})
    add("psnr", "psnr", ["metric_x.dstv", "metric_y.dstv"], {})
    add("ssim", "ssim", ["metric_x.dstv", "metric_y.dstv"], dict(ssim_kw))
    add("ms_ssim", "ms_ssim", ["metric_x.dstv", "metric_y.dstv"], dict(ssim_kw))
    add("mix_distance", "mix_distance", ["metric_x.dstv", "metric_y.dstv"],
        dict(ssim_kw, alpha=w.alpha))
    add("loss_cyc_clean", "loss_cyc_clean", ["clean.dstv", "clean_cycle.dstv"],
        {"alpha": w.alpha})
    add("loss_cyc_stripe", "loss_cyc_stripe", ["stripy.dstv", "stripy_cycle.dstv"],
        {"alpha": w.alpha})
    add("loss_hbgm", "loss_hbgm", ["stripy.dstv", "restored.dstv"],
        {"alpha": w.alpha, "levels": 3})
    add("loss_perceptual_identity", "loss_perceptual",
        ["stripy.dstv", "restored.dstv"], {"extractor": "identity"})
    add("loss_perceptual_convstack", "loss_perceptual",
        ["stripy.dstv", "restored.dstv"],
        {"extractor": "convstack", "feature_seed": seed})
    add("loss_identity", "loss_identity", ["clean.dstv", "ident_out.dstv"],
        {"alpha": w.alpha})
    add("loss_adversarial", "loss_adversarial",
        ["d_real.dstv", "d_fake_cycle.dstv", "d_fake_direct.dstv"],
        {"eps_log": w.eps_log})
    l_h = next(e for e in entries if e["name"] == "loss_hbgm")["expected_scalar"]
    l_perc = next(e for e in entries if e["name"] == "loss_perceptual_identity")["expected_scalar"]
    add("loss_cross", "loss_cross", [], {"l_h": l_h, "l_perc": l_perc, "k": w.k})
    add("loss_cross_unit", "loss_cross", [], {"l_h": 1.0, "l_perc": 1.0, "k": w.k})
    l_cross = next(e for e in entries if e["name"] == "loss_cross")["expected_scalar"]
    add("loss_total", "loss_total", [],
        {"l_adv": -2.0, "l_cyc_s": 0.25, "l_cyc_c": 0.125, "l_iden": 0.0625,
         "l_cross": l_cross, "lambda1": w.lambda1, "lambda2": w.lambda2,
         "lambda3": w.lambda3, "lambda4": w.lambda4, "lambda5": w.lambda5})
    add("loss_total_unit", "loss_total", [],
        {"l_adv": 1.0, "l_cyc_s": 1.0, "l_cyc_c": 1.0, "l_iden": 1.0,
         "l_cross": 1.001, "lambda1": w.lambda1, "lambda2": w.lambda2,
         "lambda3": w.lambda3, "lambda4": w.lambda4, "lambda5": w.lambda5})

    manifest = {"version": BUNDLE_VERSION, "seed": seed, "entries": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def verify_bundle(bundle_dir, rtol: float = BUNDLE_RTOL):
    """Re-evaluate every entry; returns (all_ok, [(name, ok, detail), ...])."""
    bdir = Path(bundle_dir)
    manifest_path = bdir / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no manifest.json in {bdir}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("version") != BUNDLE_VERSION:
        raise DataError(f"unsupported bundle version {manifest.get('version')}")

    listed = set()
    for e in manifest["entries"]:
        listed.update(e["input_files"])
        if "expected_tensor_file" in e:
            listed.add(e["expected_tensor_file"])
    present = {p.name for p in bdir.glob("*.dstv")}
    results = []
    if present != listed:
        stray = present - listed
        missing = listed - present
        results.append(("file_inventory", False,
                        f"stray={sorted(stray)} missing={sorted(missing)}"))

    for e in manifest["entries"]:
        name = e["name"]
        try:
            inputs = [read_tensor(bdir / f) for f in e["input_files"]]
            got = evaluate_entry(e["op"], inputs, e["param_map"])
            if "expected_tensor_file" in e:
                exp = read_tensor(bdir / e["expected_tensor_file"])
                scale = max(1.0, float(np.max(np.abs(exp))))
                err = float(np.max(np.abs(np.asarray(got, dtype=np.float64) - exp)))
            else:
                exp = float(e["expected_scalar"])
                scale = max(1.0, abs(exp))
                err = abs(float(got) - exp)
            ok = err <= rtol * scale
            results.append((name, ok, f"err={err:.3g} tol={rtol * scale:.3g}"))
        except Exception as ex:  # entry-level failure, keep verifying the rest
            results.append((name, False, f"exception: {ex}"))
    return all(ok for _, ok, _ in results), results
