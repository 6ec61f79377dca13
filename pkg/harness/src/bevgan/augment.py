"""Replayable train-time augmentation for paired images.

Keeps the dataset convention: nine ops in a fixed order, each firing
independently with the configured probability from a splitmix64 stream
keyed by (seed, pair_index, op_index). Geometric ops warp input and
target together; photometric ops (brightness, contrast, shadow) perturb
only the input, since only the radar side degrades in the field. The
config round-trips through the same JSON shape the dataset tools use.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

OP_NAMES = (
    "hshift",
    "vshift",
    "hflip",
    "vflip",
    "zoom",
    "rotation",
    "brightness",
    "contrast",
    "shadow",
)

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_PAIR_KEY = 0xBF58476D1CE4E5B9
_OP_KEY = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return (z ^ (z >> 31)) & _MASK


class _Stream:
    def __init__(self, seed: int, pair_index: int, op_index: int) -> None:
        s = _mix(seed & _MASK)
        s = _mix(s ^ (pair_index * _PAIR_KEY & _MASK))
        self._state = _mix(s ^ (op_index * _OP_KEY & _MASK))

    def next_float(self) -> float:
        self._state = (self._state + _GAMMA) & _MASK
        return (_mix(self._state) >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()


@dataclass(frozen=True)
class AugmentConfig:
    probability: float = 0.30
    seed: int = 0
    shift_frac: float = 0.10
    zoom: tuple[float, float] = (0.9, 1.1)
    rotation_deg: float = 5.0
    brightness_frac: float = 0.20
    contrast: tuple[float, float] = (0.8, 1.2)
    shadow_strength: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.probability <= 1.0):
            raise ConfigError(f"probability must be in [0, 1], got {self.probability}")
        if min(self.shift_frac, self.brightness_frac, self.rotation_deg) < 0:
            raise ConfigError("shift_frac, brightness_frac, rotation_deg must be non-negative")
        for name in ("zoom", "contrast"):
            lo, hi = getattr(self, name)
            if not (0.0 < lo <= hi):
                raise ConfigError(f"{name} range must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        if not (0.0 < self.shadow_strength <= 1.0):
            raise ConfigError(f"shadow_strength must be in (0, 1], got {self.shadow_strength}")

    def to_dict(self) -> dict:
        return {
            "probability": self.probability,
            "seed": self.seed,
            "shift_frac": self.shift_frac,
            "zoom": list(self.zoom),
            "rotation_deg": self.rotation_deg,
            "brightness_frac": self.brightness_frac,
            "contrast": list(self.contrast),
            "shadow_strength": self.shadow_strength,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, raw: dict) -> "AugmentConfig":
        raw = dict(raw)
        raw["zoom"] = tuple(raw["zoom"])
        raw["contrast"] = tuple(raw["contrast"])
        return cls(**raw)

    @classmethod
    def from_json(cls, text: str) -> "AugmentConfig":
        return cls.from_dict(json.loads(text))


def _quantize(img: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(img, 0.0, 255.0) + 0.5).astype(np.uint8)


def _warp(img: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Inverse-map bilinear warp (src = a @ dst + b), zero outside."""
    h, w = img.shape
    ys, xs = np.mgrid[0:h, 0:w]
    src = a @ np.stack([xs.ravel(), ys.ravel()]).astype(np.float64) + b[:, None]
    x0 = np.floor(src[0]).astype(np.int64)
    y0 = np.floor(src[1]).astype(np.int64)
    fx = src[0] - x0
    fy = src[1] - y0
    f = img.astype(np.float64)
    out = np.zeros(h * w)
    for dy, dx, wgt in (
        (0, 0, (1 - fx) * (1 - fy)),
        (0, 1, fx * (1 - fy)),
        (1, 0, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        px, py = x0 + dx, y0 + dy
        ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        out[ok] += wgt[ok] * f[py[ok], px[ok]]
    return _quantize(out.reshape(h, w))


def _about_center(img: np.ndarray, a: np.ndarray) -> np.ndarray:
    h, w = img.shape
    c = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    return _warp(img, a, c - a @ c)


def _shadow_mask(shape: tuple[int, int], rng: _Stream) -> np.ndarray:
    h, w = shape
    side = min(h, w)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    verts = []
    for k in range(4):
        ang = (math.pi / 4.0) * (2 * k + 1) + rng.uniform(-0.6, 0.6)
        rad = rng.uniform(0.15, 0.45) * side
        verts.append((cx + rad * math.cos(ang), cy + rad * math.sin(ang)))
    ys, xs = np.mgrid[0:h, 0:w]
    px, py = xs.astype(np.float64), ys.astype(np.float64)
    inside = np.zeros(shape, dtype=bool)
    for i in range(4):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % 4]
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < x_at)
    return inside


def augment_pair(
    input_img: np.ndarray, target_img: np.ndarray, cfg: AugmentConfig, pair_index: int
) -> tuple[np.ndarray, np.ndarray]:
    """Return the augmented (input, target) for one dataset pair."""
    inp = np.asarray(input_img)
    tgt = np.asarray(target_img)
    if inp.ndim != 2 or inp.dtype != np.uint8 or inp.shape != tgt.shape or tgt.dtype != np.uint8:
        raise DataError(
            f"augment needs two equal-shape 2D uint8 images, "
            f"got {inp.dtype} {inp.shape} and {tgt.dtype} {tgt.shape}"
        )
    h, w = inp.shape
    for op_index, name in enumerate(OP_NAMES):
        rng = _Stream(cfg.seed, pair_index, op_index)
        if rng.next_float() >= cfg.probability:
            continue
        if name == "hshift":
            dx = rng.uniform(-cfg.shift_frac, cfg.shift_frac) * w
            a, b = np.eye(2), np.array([-dx, 0.0])
            inp, tgt = _warp(inp, a, b), _warp(tgt, a, b)
        elif name == "vshift":
            dy = rng.uniform(-cfg.shift_frac, cfg.shift_frac) * h
            a, b = np.eye(2), np.array([0.0, -dy])
            inp, tgt = _warp(inp, a, b), _warp(tgt, a, b)
        elif name == "hflip":
            inp, tgt = inp[:, ::-1].copy(), tgt[:, ::-1].copy()
        elif name == "vflip":
            inp, tgt = inp[::-1, :].copy(), tgt[::-1, :].copy()
        elif name == "zoom":
            a = np.eye(2) / rng.uniform(*cfg.zoom)
            inp, tgt = _about_center(inp, a), _about_center(tgt, a)
        elif name == "rotation":
            t = math.radians(rng.uniform(-cfg.rotation_deg, cfg.rotation_deg))
            a = np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]])
            inp, tgt = _about_center(inp, a), _about_center(tgt, a)
        elif name == "brightness":
            delta = rng.uniform(-cfg.brightness_frac, cfg.brightness_frac) * 255.0
            inp = _quantize(inp.astype(np.float64) + delta)
        elif name == "contrast":
            factor = rng.uniform(*cfg.contrast)
            inp = _quantize((inp.astype(np.float64) - 127.5) * factor + 127.5)
        elif name == "shadow":
            mask = _shadow_mask(inp.shape, rng)
            shaded = inp.astype(np.float64)
            shaded[mask] *= cfg.shadow_strength
            inp = _quantize(shaded)
    return inp, tgt
