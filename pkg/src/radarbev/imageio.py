"""Bit-exact grayscale image files: binary PGM (P5) and 8-bit PNG."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import IngestionError, ShapeError


def write_pgm(path, pixels: np.ndarray) -> None:
    """Write a 2D uint8 array as binary PGM, maxval 255."""
    pixels = _as_gray(pixels)
    h, w = pixels.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255) into a 2D uint8 array."""
    data = Path(path).read_bytes()
    try:
        fields, offset = _pgm_header_fields(data)
        magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    except (IndexError, ValueError) as exc:
        raise IngestionError(f"{path}: malformed PGM header") from exc
    if magic != b"P5":
        raise IngestionError(f"{path}: not a binary PGM (magic {magic!r})")
    if maxval != 255:
        raise IngestionError(f"{path}: unsupported maxval {maxval}")
    raster = data[offset : offset + w * h]
    if len(raster) != w * h:
        raise IngestionError(f"{path}: truncated raster ({len(raster)} of {w * h} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def _pgm_header_fields(data: bytes) -> tuple[list[bytes], int]:
    # magic, width, height, maxval; '#' comments run to end of line
    fields: list[bytes] = []
    i = 0
    while len(fields) < 4:
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
    return fields, i + 1  # single whitespace byte after maxval


def write_png(path, pixels: np.ndarray) -> None:
    """Write a 2D uint8 array as 8-bit grayscale PNG."""
    Image.fromarray(_as_gray(pixels), mode="L").save(path, format="PNG")


def read_image(path) -> np.ndarray:
    """Read a grayscale image (PGM or PNG by extension) as a 2D uint8 array."""
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"{path}: no such file")
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L"), dtype=np.uint8)
    except Exception as exc:
        raise IngestionError(f"{path}: unreadable image ({exc})") from exc


def resize_bilinear(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resample to (height, width)."""
    img = Image.fromarray(_as_gray(pixels), mode="L")
    return np.asarray(img.resize((width, height), Image.BILINEAR), dtype=np.uint8)


def _as_gray(pixels: np.ndarray) -> np.ndarray:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise ShapeError(f"expected 2D uint8 array, got {pixels.dtype} {pixels.shape}")
    return np.ascontiguousarray(pixels)
