"""Bird's-eye-view rasterization of radar-frame point clouds.

The raster covers a square of ``span_m`` meters centered on the sensor.
Forward (+x) is up in the image, left (+y) is image-left:

    column u = floor((span/2 - y) / resolution)
    row    v = floor((span/2 - x) / resolution)

Where several points fall into one pixel, the point with the highest z
wins; ties break on higher intensity, then on input order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import BoundsError
from .pointcloud import CropSpec, PointCloud, crop_box

RADAR_FRAME = "radar"


@dataclass(frozen=True)
class BevGridSpec:
    """Square pixel grid with fixed metric scale and the ego at the center."""

    width_px: int = 256
    height_px: int = 256
    span_m: float = 200.0

    def __post_init__(self) -> None:
        if self.width_px != self.height_px:
            raise ValueError(f"grid must be square, got {self.width_px}x{self.height_px}")
        if self.width_px <= 0 or not (np.isfinite(self.span_m) and self.span_m > 0):
            raise ValueError(f"invalid grid spec {self}")

    @property
    def resolution(self) -> float:
        """Meters per pixel."""
        return self.span_m / self.width_px


class BevImage:
    """8-bit grayscale BEV raster bound to its grid spec."""

    __slots__ = ("spec", "_pixels")

    def __init__(self, spec: BevGridSpec, pixels: np.ndarray) -> None:
        pixels = np.asarray(pixels)
        if pixels.shape != (spec.height_px, spec.width_px):
            raise ValueError(
                f"pixels {pixels.shape} do not match spec "
                f"{spec.height_px}x{spec.width_px}"
            )
        if pixels.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {pixels.dtype}")
        pixels = pixels.copy()
        pixels.setflags(write=False)
        self.spec = spec
        self._pixels = pixels

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    def tobytes(self) -> bytes:
        return self._pixels.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, BevImage):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self._pixels, other._pixels)

    def __repr__(self) -> str:
        return f"BevImage({self.spec.width_px}x{self.spec.height_px}, span={self.spec.span_m}m)"


def to_radar_frame(cloud: PointCloud, extrinsic: np.ndarray) -> PointCloud:
    """Transform every point by the extrinsic and rename the frame to "radar"."""
    extrinsic = geometry.check_affine(extrinsic)
    pts = cloud.points.copy()
    pts[:, :3] = geometry.transform_points(extrinsic, cloud.xyz)
    return PointCloud(RADAR_FRAME, pts)


def project_bev(cloud: PointCloud, spec: BevGridSpec) -> BevImage:
    """Rasterize a radar-frame cloud; see the module docstring for the rules.

    Every point must satisfy x, y in (-span/2, span/2]; an out-of-bounds
    point raises BoundsError naming the offender.
    """
    pts = cloud.points
    image = np.zeros((spec.height_px, spec.width_px), dtype=np.uint8)
    if pts.shape[0] == 0:
        return BevImage(spec, image)
    half = spec.span_m / 2.0
    res = spec.resolution
    u = np.floor((half - pts[:, 1]) / res).astype(np.int64)
    v = np.floor((half - pts[:, 0]) / res).astype(np.int64)
    bad = (u < 0) | (u >= spec.width_px) | (v < 0) | (v >= spec.height_px)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise BoundsError(
            f"point {i} at ({pts[i, 0]:.6f}, {pts[i, 1]:.6f}, {pts[i, 2]:.6f}) "
            f"is outside the (-{half}, {half}] raster span"
        )
    flat = v * spec.width_px + u
    # per pixel: keep max z, tie -> max intensity, tie -> first in input order
    order = np.lexsort((np.arange(len(flat)), -pts[:, 3], -pts[:, 2], flat))
    flat_sorted = flat[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = flat_sorted[1:] != flat_sorted[:-1]
    winners = order[first]
    gray = np.floor(255.0 * pts[winners, 3] + 0.5).astype(np.uint8)
    image.flat[flat[winners]] = gray
    return BevImage(spec, image)


def project_scan(scan: PointCloud, extrinsic: np.ndarray, spec: BevGridSpec) -> BevImage:
    """Project a raw scan: radar frame -> crop to the grid span -> rasterize."""
    moved = to_radar_frame(scan, extrinsic)
    half = spec.span_m / 2.0
    cropped = crop_box(moved, CropSpec(center=(0.0, 0.0, 0.0), half_extent_x=half, half_extent_y=half))
    return project_bev(cropped, spec)
