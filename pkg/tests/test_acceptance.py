"""Acceptance criteria, one test per criterion, each printing a PASS line
at its stated tolerance. Run with:

    pytest tests/test_acceptance.py -v -s
"""

import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from stripekit import (
    LossWeights,
    ScoreSet,
    SgmConfig,
    SsimParams,
    grad_v,
    haar_decompose,
    haar_reconstruct,
    hbgm,
    loss_adversarial,
    loss_cross,
    loss_cyc_stripe,
    loss_hbgm,
    loss_total,
    mix_distance,
    ms_ssim,
    psnr,
    sample_stripe_field,
    simulate_batch,
    simulate_item,
    ssim,
)
from stripekit.harness import export_vectors, verify_bundle
from stripekit.rng import NS_STRIPE, derive_stream

from conftest import smooth_image


def _report(name, detail=""):
    print(f"[PASS] {name}" + (f" ({detail})" if detail else ""), flush=True)


def test_haar_perfect_reconstruction_and_energy():
    rng = np.random.default_rng(2024)
    x = rng.uniform(0.0, 1.0, (1000, 64, 64))
    t0 = time.monotonic()
    worst_err = 0.0
    worst_energy = 0.0
    for levels in (1, 2, 3):
        p = haar_decompose(x, levels)
        back = haar_reconstruct(p)
        worst_err = max(worst_err, float(np.abs(back - x).max()))
        e_in = np.sum(x * x, axis=(1, 2))
        e_pyr = np.sum(p.approx ** 2, axis=(1, 2))
        for bands in p.details:
            for s in (bands.h, bands.v, bands.d):
                e_pyr = e_pyr + np.sum(s * s, axis=(1, 2))
        worst_energy = max(worst_energy, float(np.max(np.abs(e_in - e_pyr) / e_in)))
    elapsed = time.monotonic() - t0
    assert worst_err < 1e-5
    assert worst_energy < 1e-6
    assert elapsed < 10.0
    _report("haar perfect reconstruction",
            f"max abs err {worst_err:.2e}, energy rel err {worst_energy:.2e}, {elapsed:.2f}s")


def test_column_constant_annihilation():
    rng = np.random.default_rng(77)
    n = 1000
    images = rng.uniform(0.0, 1.0, (n, 64, 64))
    fields = np.repeat(rng.normal(0.0, 0.08, (n, 1, 64)), 64, axis=1)

    assert np.all(grad_v(fields) == 0.0)

    hb_err = float(np.abs(hbgm(images + fields, 3) - hbgm(images, 3)).max())
    assert hb_err < 1e-5

    shifted = images + fields
    w = LossWeights()
    cyc_s = loss_cyc_stripe(images, shifted, w)
    l_h = loss_hbgm(images, shifted, 3, w)
    assert cyc_s < 1e-6
    assert l_h < 1e-6
    _report("column-constant annihilation",
            f"grad exact, hbgm diff {hb_err:.2e}, cyc_s {cyc_s:.2e}, l_h {l_h:.2e}")


def test_metric_closed_forms():
    x = smooth_image(5) * 0.8
    p = psnr(x, x + 0.1)
    assert p == pytest.approx(20.0, abs=1e-4)

    y = smooth_image(6)
    assert ssim(y, y) == pytest.approx(1.0, abs=1e-6)

    z1, z2 = smooth_image(7), np.clip(smooth_image(7) + 0.07, 0, 1)
    assert ms_ssim(z1, z2, SsimParams(scales=1)) == ssim(z1, z2)

    for alpha in (0.0, 0.5, 0.84, 1.0):
        assert mix_distance(y, y, alpha) == 0.0
    _report("metric closed forms", f"psnr {p:.6f} dB, ssim(x,x)=1, M=1 collapse, mix(x,x)=0")


def test_loss_arithmetic():
    w = LossWeights()
    total = loss_total(1, 1, 1, 1, loss_cross(1.0, 1.0, w), w)
    assert total == pytest.approx(131.01, abs=1e-12)

    half = np.full((2, 4, 4), 0.5)
    adv = loss_adversarial(ScoreSet(half, half, half), w)
    assert adv == pytest.approx(3 * np.log(0.5), abs=1e-6)
    _report("loss arithmetic", f"total {total!r}, adv(0.5) {adv:.6f}")


def test_sgm_statistics_and_determinism():
    cfg = SgmConfig(intensity_min=0.1, intensity_max=0.1, seed=0)
    coeffs = np.concatenate([
        sample_stripe_field(cfg, 0, 1, 64, derive_stream(0, NS_STRIPE, i * 4)).coeffs[0]
        for i in range(1600)
    ])
    assert coeffs.size >= 1e5
    rel = abs(coeffs.std() - 0.1) / 0.1
    assert rel < 0.02

    cleans = np.stack([smooth_image(i) for i in range(6)])
    zero_cfg = SgmConfig(intensity_min=0.0, intensity_max=0.0)
    stripy, _ = simulate_batch(cleans, zero_cfg)
    assert np.array_equal(stripy, cleans)

    cfg2 = SgmConfig(seed=31)
    seq1, _ = simulate_batch(cleans, cfg2)
    seq2, _ = simulate_batch(cleans, cfg2)
    with ThreadPoolExecutor(max_workers=4) as pool:
        par = np.concatenate(list(pool.map(
            lambda k: simulate_item(cleans[k:k + 1], cfg2, k)[0], range(6))))
    assert seq1.tobytes() == seq2.tobytes() == par.tobytes()
    _report("sgm statistics",
            f"std rel err {rel:.4f} on {coeffs.size} draws, zero-intensity identity, "
            "1-vs-N-thread bytes identical")


def test_intensity_monotonicity():
    t0 = time.monotonic()
    cleans = np.stack([smooth_image(100 + i) for i in range(50)])
    intensities = (0.025, 0.05, 0.075, 0.1, 0.125, 0.15)
    means = []
    for v in intensities:
        cfg = SgmConfig(intensity_min=v, intensity_max=v, seed=1)
        stripy, _ = simulate_batch(cleans, cfg)
        means.append(float(np.mean([psnr(cleans[k], stripy[k]) for k in range(50)])))
    elapsed = time.monotonic() - t0
    assert all(a > b for a, b in zip(means, means[1:])), means
    assert elapsed < 60.0
    _report("intensity monotonicity",
            "mean PSNR " + " > ".join(f"{m:.2f}" for m in means) + f", {elapsed:.2f}s")


def test_golden_bundle_closure(tmp_path):
    out = tmp_path / "bundle"
    manifest = export_vectors(out, seed=0)
    ok, results = verify_bundle(out)
    assert ok, [r for r in results if not r[1]]
    n = len(manifest["entries"])
    assert sum(passed for _, passed, _ in results) == len(results) >= n
    _report("golden bundle closure", f"{n} entries re-verified within 1e-6 relative")
