"""Unsupervised cycle training: clean -> simulated stripes -> restored and
stripy -> restored -> re-striped branches, a 1:1 discriminator/generator
alternation, and held-out-PSNR checkpoint selection."""

from __future__ import annotations

import csv
import subprocess
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from . import tlosses
from .data import (
    ImageFolder,
    NS_PATCHES,
    StripeConfig,
    add_stripes,
    list_images,
    load_image,
    save_image,
    stream,
)
from .nets import DiscriminatorConfig, MWUNet, MultiScaleDiscriminator, MwunetConfig
from .tlosses import LossWeights
from .tmetrics import psnr as t_psnr, ssim as t_ssim

HISTORY_COLUMNS = ("iter", "l_adv", "l_cyc_s", "l_cyc_c", "l_iden",
                   "l_h", "l_perc", "l_total", "lr")


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 300
    batch_size: int = 8          # full-scale runs use 80
    patch: int = 64
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    weights: LossWeights = LossWeights()
    sgm: StripeConfig = StripeConfig()
    gan_mode: str = "nonsaturating"  # or "minimax"
    extractor: str = "convstack"
    feature_seed: int = 0
    hbgm_levels: int = 3
    net: MwunetConfig = MwunetConfig()
    disc: DiscriminatorConfig = DiscriminatorConfig()
    seed: int = 0
    eval_every: int = 50
    val_count: int = 4

    def __post_init__(self):
        if self.iterations < 1 or self.batch_size < 1 or self.patch < 8:
            raise ValueError("iterations/batch_size/patch must be positive (patch >= 8)")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.gan_mode not in ("nonsaturating", "minimax"):
            raise ValueError(f"unknown gan_mode {self.gan_mode!r}")


class TrainState:
    def __init__(self, cfg: TrainConfig):
        torch.manual_seed(cfg.seed)
        self.cfg = cfg
        self.generator = MWUNet(cfg.net)
        self.discriminator = MultiScaleDiscriminator(cfg.disc)
        self.extractor = tlosses.make_extractor(cfg.extractor, cfg.feature_seed)
        self.opt_g = torch.optim.Adam(self.generator.parameters(),
                                      lr=cfg.lr, betas=cfg.betas)
        self.opt_d = torch.optim.Adam(self.discriminator.parameters(),
                                      lr=cfg.lr, betas=cfg.betas)
        self.sched_g = torch.optim.lr_scheduler.CosineAnnealingLR(
            self.opt_g, T_max=max(cfg.iterations, 1))
        self.sched_d = torch.optim.lr_scheduler.CosineAnnealingLR(
            self.opt_d, T_max=max(cfg.iterations, 1))
        self.iteration = 0


def _adv_terms(scores_real, scores_fake_cycle, scores_fake_direct, w: LossWeights):
    """Adversarial objective averaged over discriminator scales."""
    vals = [tlosses.loss_adversarial(r, fc, fd, w)
            for r, fc, fd in zip(scores_real, scores_fake_cycle, scores_fake_direct)]
    return torch.stack(vals).mean()


def _gen_adv(scores_fake_cycle, scores_fake_direct, w: LossWeights, mode: str):
    """Generator-side adversarial term to *minimize*."""
    eps = w.eps_log
    total = 0.0
    for fc, fd in zip(scores_fake_cycle, scores_fake_direct):
        if mode == "minimax":
            total = total + (torch.log((1 - fc).clamp(eps, 1 - eps)).mean()
                             + torch.log((1 - fd).clamp(eps, 1 - eps)).mean())
        else:  # non-saturating
            total = total - (torch.log(fc.clamp(eps, 1 - eps)).mean()
                             + torch.log(fd.clamp(eps, 1 - eps)).mean())
    return total / len(scores_fake_cycle)


def loss_components(generator, discriminator, extractor, clean, stripy,
                    cfg: TrainConfig, draw_base: int = 0):
    """Pure evaluation of every objective on one batch (no updates).

    Returns (components dict, intermediate tensors dict).
    """
    w = cfg.weights
    s_hat = add_stripes(clean, cfg.sgm, draw_base)
    c_tilde = generator(s_hat)
    c_hat = generator(stripy)
    s_tilde = add_stripes(c_hat, cfg.sgm, draw_base + clean.shape[0])
    g_of_c = generator(clean)
    d_real = discriminator(clean)
    d_fake_cycle = discriminator(c_tilde)
    d_fake_direct = discriminator(c_hat)

    l_cyc_c = tlosses.loss_cyc_clean(clean[:, 0], c_tilde[:, 0], w)
    l_cyc_s = tlosses.loss_cyc_stripe(stripy[:, 0], s_tilde[:, 0], w)
    l_h = tlosses.loss_hbgm(stripy[:, 0], c_hat[:, 0], cfg.hbgm_levels, w)
    l_perc = tlosses.loss_perceptual(stripy[:, 0], c_hat[:, 0], extractor)
    l_iden = tlosses.loss_identity(clean[:, 0], g_of_c[:, 0], w)
    l_adv = _adv_terms(d_real, d_fake_cycle, d_fake_direct, w)
    l_cross = tlosses.loss_cross(l_h, l_perc, w)
    l_total = tlosses.loss_total(l_adv, l_cyc_s, l_cyc_c, l_iden, l_cross, w)
    comps = {"l_adv": l_adv, "l_cyc_s": l_cyc_s, "l_cyc_c": l_cyc_c,
             "l_iden": l_iden, "l_h": l_h, "l_perc": l_perc,
             "l_cross": l_cross, "l_total": l_total}
    tensors = {"s_hat": s_hat, "c_tilde": c_tilde, "c_hat": c_hat,
               "s_tilde": s_tilde, "g_of_c": g_of_c, "d_real": d_real,
               "d_fake_cycle": d_fake_cycle, "d_fake_direct": d_fake_direct}
    return comps, tensors


def train_step(state: TrainState, batch_clean: torch.Tensor,
               batch_stripy: torch.Tensor) -> dict:
    """One discriminator-maximize / generator-minimize alternation."""
    cfg = state.cfg
    w = cfg.weights
    g, d = state.generator, state.discriminator
    draw_base = state.iteration * 2 * cfg.batch_size

    s_hat = add_stripes(batch_clean, cfg.sgm, draw_base)
    c_tilde = g(s_hat)
    c_hat = g(batch_stripy)

    # -- discriminator: maximize the three-term log objective
    d_real = d(batch_clean)
    d_fc = d(c_tilde.detach())
    d_fd = d(c_hat.detach())
    l_adv = _adv_terms(d_real, d_fc, d_fd, w)
    state.opt_d.zero_grad()
    (-l_adv).backward()
    state.opt_d.step()

    # -- generator: minimize the weighted objective with D fixed
    s_tilde = add_stripes(c_hat, cfg.sgm, draw_base + cfg.batch_size)
    g_of_c = g(batch_clean)
    l_cyc_c = tlosses.loss_cyc_clean(batch_clean[:, 0], c_tilde[:, 0], w)
    l_cyc_s = tlosses.loss_cyc_stripe(batch_stripy[:, 0], s_tilde[:, 0], w)
    l_h = tlosses.loss_hbgm(batch_stripy[:, 0], c_hat[:, 0], cfg.hbgm_levels, w)
    l_perc = tlosses.loss_perceptual(batch_stripy[:, 0], c_hat[:, 0], state.extractor)
    l_iden = tlosses.loss_identity(batch_clean[:, 0], g_of_c[:, 0], w)
    l_cross = tlosses.loss_cross(l_h, l_perc, w)
    adv_g = _gen_adv(d(c_tilde), d(c_hat), w, cfg.gan_mode)
    gen_total = tlosses.loss_total(adv_g, l_cyc_s, l_cyc_c, l_iden, l_cross, w)
    state.opt_g.zero_grad()
    gen_total.backward()
    state.opt_g.step()
    state.sched_g.step()
    state.sched_d.step()
    state.iteration += 1

    full_total = tlosses.loss_total(l_adv, l_cyc_s, l_cyc_c, l_iden, l_cross, w)
    comps = {
        "l_adv": float(l_adv.detach()), "l_cyc_s": float(l_cyc_s.detach()),
        "l_cyc_c": float(l_cyc_c.detach()), "l_iden": float(l_iden.detach()),
        "l_h": float(l_h.detach()), "l_perc": float(l_perc.detach()),
        "l_total": float(full_total.detach()),
        "lr": state.sched_g.get_last_lr()[0],
    }
    bad = [k for k, v in comps.items() if not np.isfinite(v)]
    if bad:
        raise TrainingDiverged(
            f"non-finite loss at iteration {state.iteration}: {bad} ({comps})")
    return comps


def parameter_checksum(module: torch.nn.Module) -> float:
    return float(sum(p.detach().double().abs().sum() for p in module.parameters()))


def _center_crop_div(arr: np.ndarray, div: int) -> np.ndarray:
    h, w = arr.shape
    h2, w2 = (h // div) * div, (w // div) * div
    r, c = (h - h2) // 2, (w - w2) // 2
    return arr[r:r + h2, c:c + w2]


def destripe_image(generator: MWUNet, img: np.ndarray) -> np.ndarray:
    div = 1 << generator.cfg.haar_levels
    x = torch.from_numpy(_center_crop_div(img, div).astype(np.float32))[None, None]
    with torch.no_grad():
        out = generator(x)
    return out[0, 0].numpy()


def fit(cfg: TrainConfig, clean_dir, stripe_dir, out_dir) -> dict:
    """Train for cfg.iterations; write history.csv and checkpoints
    (best by held-out PSNR on a clean/noisy validation split)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    clean_folder = ImageFolder(clean_dir)
    stripe_folder = ImageFolder(stripe_dir)
    if len(clean_folder) <= cfg.val_count:
        raise ValueError("not enough clean images to hold out a validation split")

    # Hold out the last val_count clean images; their noisy twins come from
    # the same stripe synthesizer at reserved draw indices.
    val_clean = [img for img in clean_folder.images[-cfg.val_count:]]
    clean_folder.images = clean_folder.images[:-cfg.val_count]
    val_pairs = []
    for i, img in enumerate(val_clean):
        x = torch.from_numpy(img.astype(np.float32))[None, None]
        noisy = add_stripes(x, cfg.sgm, draw_base=10_000_000 + i)[0, 0].numpy()
        val_pairs.append((img, noisy))

    state = TrainState(cfg)
    history = []
    best = {"psnr": -np.inf, "iteration": 0}

    def heldout_psnr() -> float:
        vals = []
        for ref, noisy in val_pairs:
            restored = destripe_image(state.generator, noisy)
            div = 1 << cfg.net.haar_levels
            vals.append(t_psnr(torch.from_numpy(_center_crop_div(ref, div)),
                               torch.from_numpy(restored)))
        return float(np.mean(vals))

    def save_checkpoint(name: str, val_psnr: float):
        torch.save({
            "generator": state.generator.state_dict(),
            "discriminator": state.discriminator.state_dict(),
            "config": asdict(cfg),
            "iteration": state.iteration,
            "val_psnr": val_psnr,
        }, out / name)

    for _ in range(cfg.iterations):
        rng = stream(cfg.seed, NS_PATCHES, state.iteration)
        batch_clean = clean_folder.sample_patches(rng, cfg.batch_size, cfg.patch)
        batch_stripy = stripe_folder.sample_patches(rng, cfg.batch_size, cfg.patch)
        comps = train_step(state, batch_clean, batch_stripy)
        history.append({"iter": state.iteration, **comps})
        if state.iteration % cfg.eval_every == 0 or state.iteration == cfg.iterations:
            val = heldout_psnr()
            if val > best["psnr"]:
                best = {"psnr": val, "iteration": state.iteration}
                save_checkpoint("best.pt", val)

    save_checkpoint("last.pt", heldout_psnr())
    with open(out / "history.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS)
        writer.writeheader()
        writer.writerows({k: row[k] for k in HISTORY_COLUMNS} for row in history)
    return {"best_psnr": best["psnr"], "best_iteration": best["iteration"],
            "history": out / "history.csv", "checkpoint": out / "best.pt"}


def load_generator(checkpoint_path) -> MWUNet:
    ckpt = torch.load(checkpoint_path, map_location="cpu", weights_only=False)
    net_cfg = MwunetConfig(**{k: tuple(v) if isinstance(v, list) else v
                              for k, v in ckpt["config"]["net"].items()})
    g = MWUNet(net_cfg)
    g.load_state_dict(ckpt["generator"])
    g.eval()
    return g


def evaluate_heldout(checkpoint_path, ref_dir, noisy_dir, out_dir,
                     crosscheck_cmd=None, crosscheck_rows: int = 10,
                     rtol: float = 1e-4) -> dict:
    """Destripe noisy_dir with the checkpointed generator, score each image
    against ref_dir with this package's metrics, and (optionally)
    cross-check rows against the reference `metrics` CLI."""
    g = load_generator(checkpoint_path)
    div = 1 << g.cfg.haar_levels
    out = Path(out_dir)
    restored_dir = out / "restored"
    ref_crop_dir = out / "ref_crop"
    restored_dir.mkdir(parents=True, exist_ok=True)
    ref_crop_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for ref_path in list_images(ref_dir):
        noisy_path = Path(noisy_dir) / ref_path.name
        if not noisy_path.exists():
            raise FileNotFoundError(f"no noisy twin for {ref_path.name}")
        ref = _center_crop_div(load_image(ref_path), div)
        restored = destripe_image(g, load_image(noisy_path))
        save_image(restored, restored_dir / ref_path.name, bitdepth=16)
        save_image(ref, ref_crop_dir / ref_path.name, bitdepth=16)
        # score what was actually written, so any consumer reproduces it
        written = load_image(restored_dir / ref_path.name)
        ref_written = load_image(ref_crop_dir / ref_path.name)
        rows.append((ref_path.name,
                     t_psnr(torch.from_numpy(ref_written), torch.from_numpy(written)),
                     float(t_ssim(torch.from_numpy(ref_written).double(),
                                  torch.from_numpy(written).double())[0])))

    csv_path = out / "metrics.csv"
    with open(csv_path, "w") as fh:
        fh.write("name,psnr,ssim\n")
        for name, p, s in rows:
            fh.write(f"{name},{'inf' if np.isinf(p) else f'{p:.6f}'},{s:.6f}\n")

    crosscheck = None
    if crosscheck_cmd is not None:
        report = subprocess.run(
            list(crosscheck_cmd) + ["metrics", str(ref_crop_dir), str(restored_dir)],
            capture_output=True, text=True, check=True)
        ours = {name: (p, s) for name, p, s in rows}
        checked = 0
        rng = np.random.default_rng(0)
        lines = [l for l in report.stdout.splitlines()[1:] if not l.startswith("mean,")]
        for line in rng.permutation(lines)[:crosscheck_rows]:
            name, p_cli, s_cli = line.split(",")[:3]
            p_ours, s_ours = ours[name]
            if p_cli == "inf":
                assert np.isinf(p_ours)
            else:
                assert abs(float(p_cli) - p_ours) <= rtol * max(1.0, abs(float(p_cli)))
            assert abs(float(s_cli) - s_ours) <= rtol
            checked += 1
        crosscheck = checked

    mean_psnr = float(np.mean([p for _, p, _ in rows]))
    mean_ssim = float(np.mean([s for _, _, s in rows]))
    return {"csv": csv_path, "mean_psnr": mean_psnr, "mean_ssim": mean_ssim,
            "crosschecked_rows": crosscheck}
