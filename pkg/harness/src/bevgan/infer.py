"""Inference: enhance radar images with a trained generator.

Only the input image feeds the generator; dropout stays active (it is
the model's noise source), seeded per image so a rerun with the same
checkpoint, inputs, and seed writes identical bytes. Outputs are 8-bit
grayscale PNGs named after the input stems, so a metrics tool can match
them to ground-truth images directly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from . import data
from .errors import DataError
from .model import UNetGenerator, set_dropout_active
from .train import TrainConfig


def load_checkpoint(path, device: str = "cpu") -> tuple[UNetGenerator, TrainConfig]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such checkpoint")
    payload = torch.load(path, map_location=device, weights_only=True)
    cfg = TrainConfig.from_dict(payload["config"])
    generator = UNetGenerator(cfg.image_size, ngf=cfg.ngf).to(device)
    generator.load_state_dict(payload["generator"])
    return generator, cfg


def enhance_array(
    generator: UNetGenerator,
    image: np.ndarray,
    seed: int = 0,
    dropout: bool = True,
) -> np.ndarray:
    """Run one uint8 image through the generator; returns uint8."""
    image = np.asarray(image)
    size = generator.image_size
    if image.shape != (size, size) or image.dtype != np.uint8:
        raise DataError(
            f"checkpoint expects a {size}x{size} uint8 image, got {image.dtype} {image.shape}"
        )
    generator.eval()
    set_dropout_active(generator, dropout)
    torch.manual_seed(seed)
    with torch.no_grad():
        x = torch.from_numpy(data.to_unit(image)[None, None])
        out = generator(x)[0, 0].numpy()
    return data.to_uint8(out)


def enhance_dir(checkpoint, input_dir, out_dir, seed: int = 0) -> list[Path]:
    """Enhance every PNG/PGM under input_dir; returns the written paths."""
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise DataError(f"{input_dir}: no such directory")
    sources = sorted(
        p for p in input_dir.iterdir() if p.suffix.lower() in (".png", ".pgm") and p.is_file()
    )
    if not sources:
        raise DataError(f"{input_dir}: no .png or .pgm images to enhance")
    generator, _ = load_checkpoint(checkpoint)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for index, src in enumerate(sources):
        enhanced = enhance_array(generator, data.read_image(src), seed=seed + index)
        dst = out_dir / (src.stem + ".png")
        data.write_png(dst, enhanced)
        written.append(dst)
    return written
