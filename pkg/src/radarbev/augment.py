"""Deterministic paired-image augmentation.

Nine operations run in a fixed order, each firing independently with the
configured probability. Geometric operations (shifts, flips, zoom,
rotation) are applied identically to the input and the target image;
photometric operations (brightness, contrast, shadow) touch only the
input. Randomness comes from splitmix64 streams keyed by
(seed, pair_index, op_index), so any pair and any op can be reproduced
in isolation, in any order, on any platform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ShapeError

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
GEOMETRIC_OPS = frozenset(OP_NAMES[:6])

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_PAIR_KEY = 0xBF58476D1CE4E5B9
_OP_KEY = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class SplitMix64:
    """splitmix64 sequence; next() yields 64 random bits."""

    __slots__ = ("_state",)

    def __init__(self, state: int) -> None:
        self._state = state & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix64(self._state)

    def next_float(self) -> float:
        # 53 high bits -> [0, 1)
        return (self.next_u64() >> 11) * (2.0**-53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()


def op_stream(seed: int, pair_index: int, op_index: int) -> SplitMix64:
    """Independent random stream for one op of one pair."""
    s = _mix64(seed & _MASK64)
    s = _mix64(s ^ (pair_index * _PAIR_KEY & _MASK64))
    s = _mix64(s ^ (op_index * _OP_KEY & _MASK64))
    return SplitMix64(s)


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
            raise ValueError(f"probability must be in [0, 1], got {self.probability}")
        if self.shift_frac < 0 or self.brightness_frac < 0 or self.rotation_deg < 0:
            raise ValueError("shift_frac, brightness_frac, rotation_deg must be non-negative")
        for name in ("zoom", "contrast"):
            lo, hi = getattr(self, name)
            if not (0.0 < lo <= hi):
                raise ValueError(f"{name} range must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        if not (0.0 < self.shadow_strength <= 1.0):
            raise ValueError(f"shadow_strength must be in (0, 1], got {self.shadow_strength}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "probability": self.probability,
                "seed": self.seed,
                "shift_frac": self.shift_frac,
                "zoom": list(self.zoom),
                "rotation_deg": self.rotation_deg,
                "brightness_frac": self.brightness_frac,
                "contrast": list(self.contrast),
                "shadow_strength": self.shadow_strength,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "AugmentConfig":
        raw = json.loads(text)
        raw["zoom"] = tuple(raw["zoom"])
        raw["contrast"] = tuple(raw["contrast"])
        return cls(**raw)


@dataclass(frozen=True)
class AugmentedPair:
    input: np.ndarray
    target: np.ndarray
    applied_ops: tuple[dict, ...]

    @property
    def applied_names(self) -> tuple[str, ...]:
        return tuple(op["op"] for op in self.applied_ops)

    def ops_json(self) -> str:
        return json.dumps(list(self.applied_ops), sort_keys=True)


def _check_image(img: np.ndarray, name: str) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ShapeError(f"{name} must be a 2-D uint8 array, got {img.shape} {img.dtype}")
    if img.size == 0:
        raise ShapeError(f"{name} is empty")
    return img


def _quantize(img: np.ndarray) -> np.ndarray:
    # round half away from zero; values are non-negative after the clip
    return np.floor(np.clip(img, 0.0, 255.0) + 0.5).astype(np.uint8)


def _warp_affine(img: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Inverse-map bilinear warp, src = A @ dst + b, zero fill outside."""
    h, w = img.shape
    ys, xs = np.mgrid[0:h, 0:w]
    dst = np.stack([xs.ravel(), ys.ravel()]).astype(np.float64)
    src = a @ dst + b[:, None]
    sx, sy = src[0], src[1]
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0
    out = np.zeros(h * w, dtype=np.float64)
    f = img.astype(np.float64)
    for dy, dx, wgt in (
        (0, 0, (1 - fx) * (1 - fy)),
        (0, 1, fx * (1 - fy)),
        (1, 0, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        px = x0 + dx
        py = y0 + dy
        ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        out[ok] += wgt[ok] * f[py[ok], px[ok]]
    return _quantize(out.reshape(h, w))


def _translate(img: np.ndarray, dx: float, dy: float) -> np.ndarray:
    return _warp_affine(img, np.eye(2), np.array([-dx, -dy]))


def _zoom(img: np.ndarray, factor: float) -> np.ndarray:
    h, w = img.shape
    c = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    a = np.eye(2) / factor
    return _warp_affine(img, a, c - a @ c)


def _rotate(img: np.ndarray, theta_rad: float) -> np.ndarray:
    h, w = img.shape
    c = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    ct, st = math.cos(theta_rad), math.sin(theta_rad)
    a = np.array([[ct, st], [-st, ct]])  # R(-theta): dst back to src
    return _warp_affine(img, a, c - a @ c)


def _shadow_quad(shape: tuple[int, int], rng: SplitMix64) -> tuple[np.ndarray, list]:
    """Even-odd mask of a jittered quadrilateral around the image center."""
    h, w = shape
    side = min(h, w)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    verts = []
    for k in range(4):
        ang = (math.pi / 4.0) * (2 * k + 1) + rng.uniform(-0.6, 0.6)
        rad = rng.uniform(0.15, 0.45) * side
        verts.append((cx + rad * math.cos(ang), cy + rad * math.sin(ang)))
    ys, xs = np.mgrid[0:h, 0:w]
    px = xs.astype(np.float64)
    py = ys.astype(np.float64)
    inside = np.zeros(shape, dtype=bool)
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < x_at)
    return inside, [[float(x), float(y)] for x, y in verts]


def augment_pair(
    input_img: np.ndarray,
    target_img: np.ndarray,
    cfg: AugmentConfig,
    pair_index: int,
) -> AugmentedPair:
    """Apply the op sequence to one image pair."""
    inp = _check_image(input_img, "input")
    tgt = _check_image(target_img, "target")
    if inp.shape != tgt.shape:
        raise ShapeError(f"input and target shapes differ: {inp.shape} vs {tgt.shape}")
    if pair_index < 0:
        raise ValueError(f"pair_index must be non-negative, got {pair_index}")
    h, w = inp.shape
    applied = []
    for op_index, name in enumerate(OP_NAMES):
        rng = op_stream(cfg.seed, pair_index, op_index)
        if rng.next_float() >= cfg.probability:
            continue
        params: dict = {}
        both: Callable[[np.ndarray], np.ndarray] | None = None
        if name == "hshift":
            dx = rng.uniform(-cfg.shift_frac, cfg.shift_frac) * w
            params["dx_px"] = dx
            both = lambda im, dx=dx: _translate(im, dx, 0.0)
        elif name == "vshift":
            dy = rng.uniform(-cfg.shift_frac, cfg.shift_frac) * h
            params["dy_px"] = dy
            both = lambda im, dy=dy: _translate(im, 0.0, dy)
        elif name == "hflip":
            both = lambda im: np.ascontiguousarray(im[:, ::-1])
        elif name == "vflip":
            both = lambda im: np.ascontiguousarray(im[::-1, :])
        elif name == "zoom":
            factor = rng.uniform(*cfg.zoom)
            params["factor"] = factor
            both = lambda im, f=factor: _zoom(im, f)
        elif name == "rotation":
            theta = math.radians(rng.uniform(-cfg.rotation_deg, cfg.rotation_deg))
            params["theta_rad"] = theta
            both = lambda im, t=theta: _rotate(im, t)
        elif name == "brightness":
            delta = rng.uniform(-cfg.brightness_frac, cfg.brightness_frac) * 255.0
            params["delta"] = delta
            inp = _quantize(inp.astype(np.float64) + delta)
        elif name == "contrast":
            factor = rng.uniform(*cfg.contrast)
            params["factor"] = factor
            inp = _quantize((inp.astype(np.float64) - 127.5) * factor + 127.5)
        elif name == "shadow":
            mask, verts = _shadow_quad(inp.shape, rng)
            params["vertices"] = verts
            shaded = inp.astype(np.float64)
            shaded[mask] *= cfg.shadow_strength
            inp = _quantize(shaded)
        applied.append({"op": name, "params": params})
        if both is not None:
            inp = both(inp)
            tgt = both(tgt)
    return AugmentedPair(input=inp, target=tgt, applied_ops=tuple(applied))


def identity_photometric(config: AugmentConfig) -> AugmentConfig:
    """Copy of the config whose photometric ops are no-ops when fired."""
    return replace(config, brightness_frac=0.0, contrast=(1.0, 1.0), shadow_strength=1.0)
