import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from destripe_trainer.data import save_image


def primary_cmd() -> list[str]:
    exe = shutil.which("stripekit")
    if exe:
        return [exe]
    return [sys.executable, "-m", "stripekit.cli"]


def synth_scene(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = 0.3 + 0.25 * (xx / w) + 0.12 * np.sin(2 * np.pi * yy / (h / 3.0))
    for _ in range(rng.integers(3, 6)):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        r = rng.uniform(h / 10, h / 4)
        img += rng.uniform(-0.25, 0.35) * np.exp(
            -((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
    r0, c0 = rng.integers(0, h - 10), rng.integers(0, w - 10)
    img[r0:r0 + 9, c0:c0 + 9] += rng.uniform(-0.15, 0.2)
    lo, hi = img.min(), img.max()
    return 0.08 + 0.84 * (img - lo) / (hi - lo)


@pytest.fixture(scope="session")
def bundle_dir(tmp_path_factory) -> Path:
    """Golden bundle produced by the reference CLI."""
    out = tmp_path_factory.mktemp("bundle")
    subprocess.run(primary_cmd() + ["export-vectors", str(out), "--seed", "0"],
                   check=True, capture_output=True)
    return out


@pytest.fixture(scope="session")
def dataset(tmp_path_factory) -> dict:
    """Unpaired training folders plus a paired held-out split, built with
    the reference CLI's simulator (uniform stripes, intensity 0.05..0.1)."""
    root = tmp_path_factory.mktemp("data")
    scenes = root / "scenes"
    scenes.mkdir()
    rng = np.random.default_rng(7)
    for i in range(40):
        save_image(synth_scene(rng, 96, 96), scenes / f"scene{i:03d}.png", bitdepth=16)

    sim = root / "sim"
    subprocess.run(primary_cmd() + [
        "simulate", str(scenes), str(sim), "--distribution", "uniform",
        "--sigma-min", "0.05", "--sigma-max", "0.1", "--seed", "11",
    ], check=True, capture_output=True)

    train_clean = root / "train_clean"
    train_stripe = root / "train_stripe"
    heldout_ref = root / "heldout_ref"
    heldout_noisy = root / "heldout_noisy"
    for d in (train_clean, train_stripe, heldout_ref, heldout_noisy):
        d.mkdir()
    # unpaired: clean domain from scenes 0..15, stripe domain from 16..31
    for i in range(16):
        shutil.copy(sim / f"scene{i:03d}_clean.png", train_clean / f"scene{i:03d}.png")
    for i in range(16, 32):
        shutil.copy(sim / f"scene{i:03d}_stripy.png", train_stripe / f"scene{i:03d}.png")
    # held-out paired split from scenes 32..39
    for i in range(32, 40):
        shutil.copy(sim / f"scene{i:03d}_clean.png", heldout_ref / f"scene{i:03d}.png")
        shutil.copy(sim / f"scene{i:03d}_stripy.png", heldout_noisy / f"scene{i:03d}.png")
    return {"train_clean": train_clean, "train_stripe": train_stripe,
            "heldout_ref": heldout_ref, "heldout_noisy": heldout_noisy}
