"""U-Net generator and patch discriminator for paired image translation.

The generator downsamples to a 1x1 bottleneck (depth = log2(image_size))
and mirrors back up with skip connections; noise enters as dropout in
the three innermost decoder blocks and stays active at inference. The
discriminator scores overlapping patches of the concatenated
(input, candidate) pair rather than the whole image; its depth scales
with image size so the patch map stays 30x30 for 64/128/256 inputs
(receptive fields 16/34/70 pixels).
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .errors import ConfigError


def _check_size(image_size: int, minimum: int = 16) -> int:
    if image_size < minimum or image_size & (image_size - 1):
        raise ConfigError(f"image_size must be a power of two >= {minimum}, got {image_size}")
    return image_size


def n_layers_for(image_size: int) -> int:
    """Stride-2 depth of the discriminator: 1 at 64, 2 at 128, 3 at 256."""
    return max(1, int(math.log2(_check_size(image_size))) - 5)


def patch_map_size(image_size: int) -> int:
    """Side of the discriminator output map: size / 2^layers - 2."""
    return image_size // (2 ** n_layers_for(image_size)) - 2


def init_weights(module: nn.Module) -> None:
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)):
            nn.init.normal_(m.weight, 0.0, 0.02)
            if m.bias is not None:
                nn.init.zeros_(m.bias)
        elif isinstance(m, nn.BatchNorm2d):
            nn.init.normal_(m.weight, 1.0, 0.02)
            nn.init.zeros_(m.bias)


def set_dropout_active(module: nn.Module, active: bool) -> None:
    """Toggle only the dropout layers; norm layers keep their mode."""
    for m in module.modules():
        if isinstance(m, nn.Dropout):
            m.train(active)


class UNetGenerator(nn.Module):
    def __init__(self, image_size: int, in_channels: int = 1, out_channels: int = 1,
                 ngf: int = 64, dropout: float = 0.5) -> None:
        super().__init__()
        depth = int(math.log2(_check_size(image_size)))
        self.image_size = image_size
        widths = [ngf * min(8, 2**k) for k in range(depth)]

        encoders = []
        prev = in_channels
        for k, width in enumerate(widths):
            layers: list[nn.Module] = []
            if k > 0:
                layers.append(nn.LeakyReLU(0.2))
            layers.append(nn.Conv2d(prev, width, 4, stride=2, padding=1))
            if 0 < k < depth - 1:
                layers.append(nn.BatchNorm2d(width))
            encoders.append(nn.Sequential(*layers))
            prev = width
        self.encoders = nn.ModuleList(encoders)

        decoders = []
        n_dropout = min(3, depth - 1)
        for j in range(depth):
            in_ch = widths[depth - 1] if j == 0 else widths[depth - 1 - j] * 2
            last = j == depth - 1
            out_ch = out_channels if last else widths[depth - 2 - j]
            layers = [nn.ReLU(), nn.ConvTranspose2d(in_ch, out_ch, 4, stride=2, padding=1)]
            if last:
                layers.append(nn.Tanh())
            else:
                layers.append(nn.BatchNorm2d(out_ch))
                if j < n_dropout:
                    layers.append(nn.Dropout(dropout))
            decoders.append(nn.Sequential(*layers))
        self.decoders = nn.ModuleList(decoders)
        init_weights(self)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-2:] != (self.image_size, self.image_size):
            raise ConfigError(
                f"generator built for {self.image_size}x{self.image_size}, got {tuple(x.shape)}"
            )
        feats = []
        h = x
        for enc in self.encoders:
            h = enc(h)
            feats.append(h)
        for j, dec in enumerate(self.decoders):
            h = dec(h if j == 0 else torch.cat([h, feats[-1 - j]], dim=1))
        return h


class PatchDiscriminator(nn.Module):
    def __init__(self, image_size: int, in_channels: int = 2, ndf: int = 64) -> None:
        super().__init__()
        n_layers = n_layers_for(image_size)
        self.image_size = image_size
        layers: list[nn.Module] = [
            nn.Conv2d(in_channels, ndf, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
        ]
        prev = ndf
        for i in range(1, n_layers):
            width = ndf * min(2**i, 8)
            layers += [
                nn.Conv2d(prev, width, 4, stride=2, padding=1),
                nn.BatchNorm2d(width),
                nn.LeakyReLU(0.2),
            ]
            prev = width
        width = ndf * min(2**n_layers, 8)
        layers += [
            nn.Conv2d(prev, width, 4, stride=1, padding=1),
            nn.BatchNorm2d(width),
            nn.LeakyReLU(0.2),
            nn.Conv2d(width, 1, 4, stride=1, padding=1),
        ]
        self.net = nn.Sequential(*layers)
        init_weights(self)

    def forward(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([x, y], dim=1))
