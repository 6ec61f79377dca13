"""Point-cloud container, voxel downsampling, map accumulation, box cropping.

A cloud stores points as an (N, 4) float64 array of (x, y, z, intensity)
with intensity normalized to [0, 1]. Clouds are immutable after
construction so they can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import geometry
from .errors import EmptyInputError, FrameMismatchError
from .geometry import Pose

MAP_FRAME = "map"


class PointCloud:
    """Immutable set of 3D points with intensities in a named frame."""

    __slots__ = ("frame_id", "_points")

    def __init__(self, frame_id: str, points) -> None:
        pts = np.asarray(points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 4)
        if pts.ndim != 2 or pts.shape[1] != 4:
            raise ValueError(f"points must be (N, 4), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains NaN or Inf")
        inten = pts[:, 3]
        if pts.shape[0] and (inten.min() < 0.0 or inten.max() > 1.0):
            raise ValueError("intensity outside [0, 1]")
        pts = pts.copy()
        pts.setflags(write=False)
        self.frame_id = frame_id
        self._points = pts

    @property
    def points(self) -> np.ndarray:
        """Read-only (N, 4) array of (x, y, z, intensity)."""
        return self._points

    @property
    def xyz(self) -> np.ndarray:
        return self._points[:, :3]

    @property
    def intensity(self) -> np.ndarray:
        return self._points[:, 3]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __repr__(self) -> str:
        return f"PointCloud(frame_id={self.frame_id!r}, n={len(self)})"


@dataclass(frozen=True)
class VoxelSpec:
    """Leaf sizes of the downsampling grid, meters per axis."""

    leaf_x: float = 0.8
    leaf_y: float = 0.8
    leaf_z: float = 0.8

    def __post_init__(self) -> None:
        for leaf in (self.leaf_x, self.leaf_y, self.leaf_z):
            if not (np.isfinite(leaf) and leaf > 0.0):
                raise ValueError(f"leaf sizes must be positive and finite, got {self}")

    @property
    def leaves(self) -> np.ndarray:
        return np.array([self.leaf_x, self.leaf_y, self.leaf_z])


@dataclass(frozen=True)
class CropSpec:
    """Axis-aligned crop box. ``half_extent_z=None`` keeps the full z range."""

    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    half_extent_x: float = 100.0
    half_extent_y: float = 100.0
    half_extent_z: float | None = None

    def __post_init__(self) -> None:
        extents = [self.half_extent_x, self.half_extent_y]
        if self.half_extent_z is not None:
            extents.append(self.half_extent_z)
        if any(not (np.isfinite(h) and h > 0.0) for h in extents):
            raise ValueError(f"half extents must be positive, got {self}")


def voxel_filter(cloud: PointCloud, spec: VoxelSpec) -> PointCloud:
    """Keep one centroid (with mean intensity) per occupied voxel.

    The voxel index of a point is floor(p / leaf) per axis. Output points
    are sorted by voxel index (z, then y, then x) so the result is
    deterministic regardless of input order.
    """
    pts = cloud.points
    if pts.shape[0] == 0:
        return cloud
    idx = np.floor(pts[:, :3] / spec.leaves).astype(np.int64)
    # lexsort: last key is primary
    order = np.lexsort((idx[:, 0], idx[:, 1], idx[:, 2]))
    idx_sorted = idx[order]
    pts_sorted = pts[order]
    boundary = np.ones(len(order), dtype=bool)
    boundary[1:] = np.any(idx_sorted[1:] != idx_sorted[:-1], axis=1)
    starts = np.flatnonzero(boundary)
    sums = np.add.reduceat(pts_sorted, starts, axis=0)
    counts = np.diff(np.append(starts, len(order)))
    centroids = sums / counts[:, None]
    # float summation can push a mean of in-range intensities past 1 by 1 ulp
    centroids[:, 3] = np.clip(centroids[:, 3], 0.0, 1.0)
    return PointCloud(cloud.frame_id, centroids)


def accumulate_map(
    scans: Sequence[tuple[PointCloud, Pose]], spec: VoxelSpec
) -> PointCloud:
    """Voxel-filter each scan, transform it by its pose, concatenate in order.

    Filtering happens before the transform so the grid is anchored in the
    sensor frame of each scan. The result lives in the "map" frame.
    """
    if len(scans) == 0:
        raise EmptyInputError("accumulate_map needs at least one scan")
    frames = {cloud.frame_id for cloud, _ in scans}
    if len(frames) != 1:
        raise FrameMismatchError(f"scans span multiple frames: {sorted(frames)}")
    parts = []
    for cloud, pose in scans:
        filtered = voxel_filter(cloud, spec)
        moved = filtered.points.copy()
        moved[:, :3] = geometry.transform_points(geometry.pose_to_matrix(pose), filtered.xyz)
        parts.append(moved)
    return PointCloud(MAP_FRAME, np.concatenate(parts, axis=0))


def crop_box(cloud: PointCloud, spec: CropSpec) -> PointCloud:
    """Keep points with center-half < coord <= center+half on x and y.

    The lower bound is exclusive and the upper inclusive so that every
    retained point lands on a valid raster index downstream. z is cropped
    the same way only when the spec carries a z half extent.
    """
    pts = cloud.points
    cx, cy, cz = spec.center
    keep = (
        (pts[:, 0] > cx - spec.half_extent_x)
        & (pts[:, 0] <= cx + spec.half_extent_x)
        & (pts[:, 1] > cy - spec.half_extent_y)
        & (pts[:, 1] <= cy + spec.half_extent_y)
    )
    if spec.half_extent_z is not None:
        keep &= (pts[:, 2] > cz - spec.half_extent_z) & (pts[:, 2] <= cz + spec.half_extent_z)
    return PointCloud(cloud.frame_id, pts[keep])
