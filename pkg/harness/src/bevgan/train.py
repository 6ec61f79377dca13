"""Training loop: conditional adversarial loss plus weighted L1.

Alternates one discriminator step and one generator step per batch.
The objective for the generator is BCE(D(x, G(x)), real) +
l1_weight * L1(G(x), y); the discriminator sees (x, y) as real and
(x, G(x).detach()) as fake, with its loss halved so both nets move at
comparable rates. Each epoch rewrites the checkpoint atomically
(temp file + rename) with the config embedded, and appends to a JSON
loss-curve file next to it. Runs are deterministic for a fixed seed on
a fixed backend; kernel changes across torch builds can shift results.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from . import data
from .augment import AugmentConfig, augment_pair
from .errors import ConfigError
from .model import PatchDiscriminator, UNetGenerator

CHECKPOINT_NAME = "checkpoint.pt"
LOSSES_NAME = "losses.json"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 8
    learning_rate: float = 2e-4
    betas: tuple[float, float] = (0.5, 0.999)
    l1_weight: float = 100.0
    image_size: int = 64
    seed: int = 0
    ngf: int = 64
    ndf: int = 64
    freeze_discriminator: bool = False
    augment: AugmentConfig = field(default_factory=AugmentConfig)

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError(
                f"epochs and batch_size must be positive, got {self.epochs}, {self.batch_size}"
            )
        # l1_weight 0 is allowed: adversarial-only smoke runs use it
        if self.l1_weight < 0 or self.learning_rate <= 0:
            raise ConfigError("l1_weight must be >= 0 and learning_rate > 0")
        if self.image_size < 64 or self.image_size & (self.image_size - 1):
            raise ConfigError(f"image_size must be a power of two >= 64, got {self.image_size}")
        if self.ngf < 1 or self.ndf < 1:
            raise ConfigError("ngf and ndf must be positive")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "betas": list(self.betas),
            "l1_weight": self.l1_weight,
            "image_size": self.image_size,
            "seed": self.seed,
            "ngf": self.ngf,
            "ndf": self.ndf,
            "freeze_discriminator": self.freeze_discriminator,
            "augment": self.augment.to_dict(),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        raw = dict(raw)
        raw["betas"] = tuple(raw["betas"])
        raw["augment"] = AugmentConfig.from_dict(raw["augment"])
        return cls(**raw)


def _atomic_write_bytes(path: Path, writer) -> None:
    tmp = path.with_name(path.name + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


def save_checkpoint(path, generator, discriminator, cfg: TrainConfig, epoch: int) -> None:
    payload = {
        "config": cfg.to_dict(),
        "generator": generator.state_dict(),
        "discriminator": discriminator.state_dict(),
        "epoch": epoch,
    }
    _atomic_write_bytes(Path(path), lambda tmp: torch.save(payload, tmp))


def train(manifest, cfg: TrainConfig, out_dir, device: str = "cpu") -> Path:
    """Train on the manifest's train split; returns the checkpoint path."""
    if not isinstance(manifest, data.Manifest):
        manifest = data.read_manifest(manifest)
    records = manifest.split("train")
    if not records:
        raise ConfigError("manifest has no records in the train split")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_path = out_dir / CHECKPOINT_NAME
    losses_path = out_dir / LOSSES_NAME

    pairs = [data.load_pair(r, cfg.image_size) for r in records]
    n = len(pairs)

    torch.manual_seed(cfg.seed)
    generator = UNetGenerator(cfg.image_size, ngf=cfg.ngf).to(device)
    discriminator = PatchDiscriminator(cfg.image_size, ndf=cfg.ndf).to(device)
    opt_g = torch.optim.Adam(generator.parameters(), lr=cfg.learning_rate, betas=cfg.betas)
    opt_d = torch.optim.Adam(discriminator.parameters(), lr=cfg.learning_rate, betas=cfg.betas)
    bce = nn.BCEWithLogitsLoss()
    l1 = nn.L1Loss()
    shuffler = torch.Generator().manual_seed(cfg.seed)

    curves = []
    for epoch in range(cfg.epochs):
        order = torch.randperm(n, generator=shuffler).tolist()
        sums = {"d_loss": 0.0, "g_loss": 0.0, "g_adv": 0.0, "g_l1": 0.0}
        n_batches = 0
        for start in range(0, n, cfg.batch_size):
            batch_x, batch_y = [], []
            for i in order[start : start + cfg.batch_size]:
                radar, gt = pairs[i]
                if cfg.augment.probability > 0.0:
                    # a fresh stream index per epoch so variants differ over time
                    radar, gt = augment_pair(radar, gt, cfg.augment, epoch * n + i)
                batch_x.append(data.to_unit(radar))
                batch_y.append(data.to_unit(gt))
            x = torch.from_numpy(np.stack(batch_x)[:, None]).to(device)
            y = torch.from_numpy(np.stack(batch_y)[:, None]).to(device)

            fake = generator(x)

            pred_real = discriminator(x, y)
            pred_fake = discriminator(x, fake.detach())
            d_loss = 0.5 * (
                bce(pred_real, torch.ones_like(pred_real))
                + bce(pred_fake, torch.zeros_like(pred_fake))
            )
            if not cfg.freeze_discriminator:
                opt_d.zero_grad()
                d_loss.backward()
                opt_d.step()

            pred_fake = discriminator(x, fake)
            g_adv = bce(pred_fake, torch.ones_like(pred_fake))
            g_l1 = l1(fake, y)
            g_loss = g_adv + cfg.l1_weight * g_l1
            opt_g.zero_grad()
            g_loss.backward()
            opt_g.step()

            sums["d_loss"] += d_loss.item()
            sums["g_loss"] += g_loss.item()
            sums["g_adv"] += g_adv.item()
            sums["g_l1"] += g_l1.item()
            n_batches += 1

        curves.append({"epoch": epoch, **{k: v / n_batches for k, v in sums.items()}})
        save_checkpoint(checkpoint_path, generator, discriminator, cfg, epoch)
        _atomic_write_bytes(
            losses_path,
            lambda tmp: tmp.write_text(json.dumps(curves, indent=2), encoding="utf-8"),
        )
    return checkpoint_path
