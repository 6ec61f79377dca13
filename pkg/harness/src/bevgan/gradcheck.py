"""Finite-difference validation of the training objective's gradients.

Builds a tiny generator/discriminator pair in double precision, scores
the same objective the training loop uses, and compares autograd
against central differences on a random sample of parameters. Dropout
is disabled and norm layers run in eval mode so the loss is a
deterministic function of the parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import torch
from torch import nn

from .errors import ConfigError
from .model import PatchDiscriminator, UNetGenerator


@dataclass(frozen=True)
class GradCheckReport:
    target: str
    tolerance: float
    entries: tuple[dict, ...] = field(default_factory=tuple)

    @property
    def max_rel_err(self) -> float:
        return max((e["rel_err"] for e in self.entries), default=0.0)

    @property
    def failures(self) -> tuple[dict, ...]:
        return tuple(e for e in self.entries if e["rel_err"] >= self.tolerance)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> str:
        return json.dumps(
            {
                "target": self.target,
                "tolerance": self.tolerance,
                "max_rel_err": self.max_rel_err,
                "passed": self.passed,
                "entries": list(self.entries),
                "failures": [e["param"] for e in self.failures],
            },
            sort_keys=True,
        )


def gradcheck(
    image_size: int = 16,
    n_params: int = 20,
    seed: int = 0,
    tolerance: float = 1e-3,
    target: str = "generator",
    l1_weight: float = 100.0,
    adversarial: bool = True,
) -> GradCheckReport:
    """Compare autograd to central differences on n_params random weights."""
    if target not in ("generator", "discriminator"):
        raise ConfigError(f"target must be 'generator' or 'discriminator', got {target!r}")
    torch.manual_seed(seed)
    generator = UNetGenerator(image_size, ngf=4).double()
    discriminator = PatchDiscriminator(image_size, ndf=4).double()
    generator.eval()
    discriminator.eval()

    x = torch.rand(1, 1, image_size, image_size, dtype=torch.float64) * 2 - 1
    y = torch.rand(1, 1, image_size, image_size, dtype=torch.float64) * 2 - 1
    bce = nn.BCEWithLogitsLoss()
    l1 = nn.L1Loss()

    if target == "generator":
        net = generator

        def loss_fn() -> torch.Tensor:
            fake = generator(x)
            total = l1_weight * l1(fake, y)
            if adversarial:
                pred = discriminator(x, fake)
                total = total + bce(pred, torch.ones_like(pred))
            return total

    else:
        net = discriminator
        with torch.no_grad():
            frozen_fake = generator(x)

        def loss_fn() -> torch.Tensor:
            pred_real = discriminator(x, y)
            pred_fake = discriminator(x, frozen_fake)
            return 0.5 * (
                bce(pred_real, torch.ones_like(pred_real))
                + bce(pred_fake, torch.zeros_like(pred_fake))
            )

    params = [(name, p) for name, p in net.named_parameters() if p.requires_grad]
    net.zero_grad()
    base_loss = loss_fn()
    base_loss.backward()

    def central(p: torch.Tensor, i: int, h: float) -> float:
        with torch.no_grad():
            original = float(p.view(-1)[i])
            p.view(-1)[i] = original + h
            hi = float(loss_fn())
            p.view(-1)[i] = original - h
            lo = float(loss_fn())
            p.view(-1)[i] = original
        return (hi - lo) / (2.0 * h)

    # central differences cannot resolve gradients below the rounding
    # noise of the loss itself (~eps * |loss| / h); sample only
    # parameters whose analytic gradient clears that floor with margin
    step = 1e-6
    noise = 2.3e-16 * max(1.0, abs(float(base_loss.detach()))) / step
    floor = noise * 20.0 / tolerance
    flat = [
        (name, p, i)
        for name, p in params
        for i in range(p.numel())
        if abs(float(p.grad.view(-1)[i])) >= floor
    ]
    if len(flat) < n_params:
        raise ConfigError(
            f"only {len(flat)} parameters have gradients measurable by "
            f"finite differences, need {n_params}"
        )
    order = torch.randperm(len(flat)).tolist()

    entries = []
    for k in order:
        if len(entries) == n_params:
            break
        name, p, i = flat[k]
        analytic = float(p.grad.view(-1)[i])
        h = step * max(1.0, abs(float(p.detach().view(-1)[i])))
        numeric = central(p, i, h)
        coarse = central(p, i, 4.0 * h)
        # the loss is piecewise smooth; a secant spanning a ReLU or L1
        # kink gives a bogus slope and shows up as disagreement between
        # step sizes, so skip that parameter and sample another
        if abs(numeric - coarse) > (tolerance / 4.0) * max(abs(numeric), abs(coarse)):
            continue
        rel_err = abs(analytic - numeric) / (max(abs(analytic), abs(numeric)) + 1e-12)
        entries.append(
            {
                "param": f"{name}[{i}]",
                "analytic": analytic,
                "numeric": numeric,
                "rel_err": rel_err,
            }
        )
    if len(entries) < n_params:
        raise ConfigError(
            f"only {len(entries)} of {n_params} sampled parameters sit on "
            "smooth regions of the loss"
        )
    return GradCheckReport(target=target, tolerance=tolerance, entries=tuple(entries))
