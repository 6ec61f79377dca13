"""Shared fixtures: small pair datasets written through the public file formats."""

import json

import numpy as np
import pytest

from bevgan.data import write_png


def write_pgm(path, pixels):
    h, w = pixels.shape
    path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(pixels).tobytes())


def make_pair(rng, size):
    """A bright box on black, plus a smeared noisy rendition as the input."""
    gt = np.zeros((size, size), dtype=np.uint8)
    x0, y0 = (int(v) for v in rng.integers(4, size - 20, 2))
    bw, bh = (int(v) for v in rng.integers(6, 14, 2))
    gt[y0 : y0 + bh, x0 : x0 + bw] = int(rng.integers(120, 250))
    f = gt.astype(np.float64)
    smear = sum(np.roll(f, s, axis) for s in (-1, 0, 1) for axis in (0, 1)) / 6.0
    noisy = smear * (1.0 + rng.normal(0.0, 0.1, f.shape))
    return np.clip(noisy, 0, 255).astype(np.uint8), gt


def write_pair_dataset(root, n_train=6, n_test=2, size=64, seed=11):
    """Write radar/gt images plus a JSON Lines manifest; returns the manifest path."""
    rng = np.random.default_rng(seed)
    radar_dir = root / "radar"
    gt_dir = root / "gt"
    radar_dir.mkdir(parents=True, exist_ok=True)
    gt_dir.mkdir(parents=True, exist_ok=True)
    header = {
        "format": "bev-pair-manifest",
        "grid": {"span_m": 2.0 * size, "width_px": size, "height_px": size},
    }
    lines = [json.dumps(header, sort_keys=True)]
    for i in range(n_train + n_test):
        radar, gt = make_pair(rng, size)
        ts = 1_000_000_000 * i
        write_png(radar_dir / f"{ts}.png", radar)
        write_pgm(gt_dir / f"{ts}.pgm", gt)
        record = {
            "radar_path": f"radar/{ts}.png",
            "gt_path": f"gt/{ts}.pgm",
            "timestamp_ns": ts,
            "split": "train" if i < n_train else "test",
        }
        lines.append(json.dumps(record, sort_keys=True))
    path = root / "manifest.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def pair_manifest(tmp_path):
    return write_pair_dataset(tmp_path)
