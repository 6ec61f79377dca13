"""Readers for the paired-dataset interchange formats.

The trainer consumes datasets through their on-disk form only: a JSON
Lines manifest (one header line with the grid geometry, then one record
per radar/ground-truth pair) and 8-bit grayscale images, either binary
PGM (P5, maxval 255) or PNG. Paths in the manifest are relative to the
manifest's directory unless absolute.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError

log = logging.getLogger(__name__)

MANIFEST_FORMAT = "bev-pair-manifest"


@dataclass(frozen=True)
class PairRecord:
    radar_path: Path
    gt_path: Path
    timestamp_ns: int
    split: str


@dataclass(frozen=True)
class Manifest:
    grid: dict
    records: tuple[PairRecord, ...]

    def split(self, name: str) -> tuple[PairRecord, ...]:
        return tuple(r for r in self.records if r.split == name)


def read_manifest(path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such manifest")
    base = path.parent
    records = []
    grid = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: bad JSON: {exc}") from exc
            if lineno == 1:
                if doc.get("format") != MANIFEST_FORMAT:
                    raise DataError(f"{path}: line 1: not a {MANIFEST_FORMAT} header")
                grid = doc.get("grid", {})
                continue
            try:
                records.append(
                    PairRecord(
                        radar_path=_resolve(base, doc["radar_path"]),
                        gt_path=_resolve(base, doc["gt_path"]),
                        timestamp_ns=int(doc["timestamp_ns"]),
                        split=str(doc.get("split", "train")),
                    )
                )
            except KeyError as exc:
                raise DataError(f"{path}: line {lineno}: missing field {exc}") from exc
    if grid is None:
        raise DataError(f"{path}: empty manifest")
    return Manifest(grid=grid, records=tuple(records))


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def read_image(path) -> np.ndarray:
    """Load a grayscale image as a 2D uint8 array."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such image")
    if path.suffix.lower() == ".pgm":
        return _read_pgm(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L"), dtype=np.uint8)
    except Exception as exc:
        raise DataError(f"{path}: unreadable image ({exc})") from exc


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    fields: list[bytes] = []
    i = 0
    while len(fields) < 4 and i < len(data):
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        fields.append(data[start:i])
    try:
        magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}: malformed PGM header") from exc
    if magic != b"P5" or maxval != 255:
        raise DataError(f"{path}: unsupported PGM variant ({magic!r}, maxval {maxval})")
    raster = data[i + 1 : i + 1 + w * h]
    if len(raster) != w * h:
        raise DataError(f"{path}: truncated raster ({len(raster)} of {w * h} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def write_png(path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise DataError(f"expected 2D uint8 image, got {pixels.dtype} {pixels.shape}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels, mode="L").save(path, format="PNG")


def load_pair(record: PairRecord, image_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Read one (radar, gt) pair, resampling to image_size with a warning."""
    out = []
    for path in (record.radar_path, record.gt_path):
        img = read_image(path)
        if img.shape != (image_size, image_size):
            log.warning("%s: resampling %s to %dx%d", path, img.shape, image_size, image_size)
            pil = Image.fromarray(img, mode="L")
            img = np.asarray(pil.resize((image_size, image_size), Image.BILINEAR), dtype=np.uint8)
        out.append(img)
    return out[0], out[1]


def to_unit(img: np.ndarray) -> np.ndarray:
    """uint8 [0, 255] -> float32 [-1, 1]."""
    return (img.astype(np.float32) / 127.5) - 1.0


def to_uint8(x: np.ndarray) -> np.ndarray:
    """float [-1, 1] -> uint8 [0, 255] with round-half-up."""
    scaled = (np.asarray(x, dtype=np.float64) + 1.0) * 127.5
    return np.floor(np.clip(scaled, 0.0, 255.0) + 0.5).astype(np.uint8)
