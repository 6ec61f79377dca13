"""Synthetic box worlds with closed-form BEV truth.

A World is a set of axis-aligned reflective boxes. From it this module
derives three views of the same scene:

* raycast_scan: a simulated LiDAR sweep (slab-method ray/box hits),
* analytic_bev: the exact footprint rasterization, no sampling involved,
* render_radar: a blurred, speckled, quantized degradation of the truth.

generate_dataset runs a trajectory through all three plus the real
accumulate/crop/project path, producing a pair dataset whose ground
truth can be cross-checked against the analytic images.

The radar degradation is a stand-in (blur + speckle + 8-bit quantize),
not a physical radar model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from . import imageio
from .errors import IngestionError, PoseInsideObjectError
from .geometry import Pose, inverse, pose_to_matrix
from .pairing import PairManifest, PoseTrack, build_pairs, write_manifest
from .pointcloud import PointCloud, VoxelSpec, accumulate_map
from .projection import BevGridSpec, BevImage

LIDAR_FRAME = "lidar"

_DEFAULT_ELEVATIONS = tuple(np.deg2rad(np.linspace(-15.0, 15.0, 16)).tolist())


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, min/max corners in meters."""

    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]
    reflectivity: float

    def __post_init__(self) -> None:
        lo = np.asarray(self.min_corner, dtype=np.float64)
        hi = np.asarray(self.max_corner, dtype=np.float64)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("box corners must be 3-vectors")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box corners must be finite")
        if not np.all(hi > lo):
            raise ValueError(f"box must have positive volume: min {lo}, max {hi}")
        if not (0.0 < self.reflectivity <= 1.0):
            raise ValueError(f"reflectivity must be in (0, 1], got {self.reflectivity}")


@dataclass(frozen=True)
class World:
    boxes: tuple[Box, ...]
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]] = (
        (-100.0, -100.0, -10.0),
        (100.0, 100.0, 10.0),
    )

    def __post_init__(self) -> None:
        lo, hi = (np.asarray(c, dtype=np.float64) for c in self.bounds)
        if not np.all(hi > lo):
            raise ValueError(f"world bounds must have positive extent: {self.bounds}")


@dataclass(frozen=True)
class LidarModel:
    n_azimuth: int = 1024
    elevations: tuple[float, ...] = _DEFAULT_ELEVATIONS
    max_range: float = 120.0

    def __post_init__(self) -> None:
        if self.n_azimuth < 4:
            raise ValueError(f"n_azimuth must be >= 4, got {self.n_azimuth}")
        if not self.elevations:
            raise ValueError("elevations must be non-empty")
        if self.max_range <= 0:
            raise ValueError(f"max_range must be positive, got {self.max_range}")


@dataclass(frozen=True)
class RadarModel:
    blur_sigma_px: float = 2.0
    speckle_sigma: float = 0.08
    seed: int = 0

    def __post_init__(self) -> None:
        if self.blur_sigma_px < 0 or self.speckle_sigma < 0:
            raise ValueError("blur_sigma_px and speckle_sigma must be non-negative")


@dataclass(frozen=True)
class SynthModels:
    lidar: LidarModel = field(default_factory=LidarModel)
    radar: RadarModel = field(default_factory=RadarModel)
    voxel: VoxelSpec = field(default_factory=VoxelSpec)


# ---------------------------------------------------------------------------
# world JSON


def read_world_json(path) -> World:
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"{path}: no such file")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        boxes = tuple(
            Box(
                min_corner=tuple(b["min"]),
                max_corner=tuple(b["max"]),
                reflectivity=b["reflectivity"],
            )
            for b in raw["boxes"]
        )
        kwargs = {}
        if "bounds" in raw:
            kwargs["bounds"] = (tuple(raw["bounds"]["min"]), tuple(raw["bounds"]["max"]))
        return World(boxes=boxes, **kwargs)
    except (ValueError, KeyError, TypeError) as exc:
        raise IngestionError(f"{path}: bad world file: {exc}") from exc


def write_world_json(world: World, path) -> None:
    doc = {
        "bounds": {"min": list(world.bounds[0]), "max": list(world.bounds[1])},
        "boxes": [
            {
                "min": list(b.min_corner),
                "max": list(b.max_corner),
                "reflectivity": b.reflectivity,
            }
            for b in world.boxes
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# LiDAR simulation


def raycast_scan(world: World, pose: Pose, model: LidarModel) -> PointCloud:
    """One sweep of slab-method ray/box intersections, points in the sensor frame.

    Rays leave the pose origin at every (azimuth, elevation) combination;
    the nearest box hit within max_range becomes a point whose intensity
    is that box's reflectivity. The first box in world order wins exact
    range ties.
    """
    origin = np.array([pose.x, pose.y, pose.z])
    for b in world.boxes:
        lo = np.asarray(b.min_corner)
        hi = np.asarray(b.max_corner)
        if np.all(origin > lo) and np.all(origin < hi):
            raise PoseInsideObjectError(
                f"pose at {origin.tolist()} is inside box {b.min_corner}..{b.max_corner}"
            )
    if not world.boxes:
        return PointCloud(LIDAR_FRAME, np.empty((0, 4)))
    az = 2.0 * math.pi * np.arange(model.n_azimuth) / model.n_azimuth
    el = np.asarray(model.elevations, dtype=np.float64)
    aa, ee = np.meshgrid(az, el, indexing="ij")
    dirs_sensor = np.stack(
        [np.cos(ee) * np.cos(aa), np.cos(ee) * np.sin(aa), np.sin(ee)], axis=-1
    ).reshape(-1, 3)
    rot = pose_to_matrix(pose)[:3, :3]
    dirs_world = dirs_sensor @ rot.T
    # tiny stand-in for zero components keeps 0 * inf out of the slab test
    safe = np.where(dirs_world == 0.0, 1e-300, dirs_world)
    lo = np.array([b.min_corner for b in world.boxes])
    hi = np.array([b.max_corner for b in world.boxes])
    refl = np.array([b.reflectivity for b in world.boxes])
    t1 = (lo[None, :, :] - origin) / safe[:, None, :]
    t2 = (hi[None, :, :] - origin) / safe[:, None, :]
    tmin = np.minimum(t1, t2).max(axis=2)
    tmax = np.maximum(t1, t2).min(axis=2)
    t_hit = np.where((tmax >= tmin) & (tmin > 0.0) & (tmin <= model.max_range), tmin, np.inf)
    best = np.argmin(t_hit, axis=1)
    rng = np.arange(len(best))
    t_best = t_hit[rng, best]
    valid = np.isfinite(t_best)
    pts = np.empty((int(valid.sum()), 4))
    pts[:, :3] = dirs_sensor[valid] * t_best[valid, None]
    pts[:, 3] = refl[best[valid]]
    return PointCloud(LIDAR_FRAME, pts)


# ---------------------------------------------------------------------------
# analytic BEV truth


def _footprint_quad(box: Box, world_to_radar: np.ndarray) -> np.ndarray:
    """(4, 2) xy corners of the box footprint in the radar frame."""
    (x0, y0, _), (x1, y1, _) = box.min_corner, box.max_corner
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    r = world_to_radar[:2, :2]
    t = world_to_radar[:2, 3]
    return corners @ r.T + t


def analytic_bev(world: World, pose: Pose, grid: BevGridSpec) -> BevImage:
    """Exact footprint rasterization: the tallest box covering a pixel wins.

    A pixel counts as covered only when its square and the box footprint
    overlap with positive area (edge touching is not coverage), decided
    by a separating-axis test on the footprint quad. Ties on box top
    height fall to higher reflectivity, then earlier world order, the
    same rule projection applies to points. Assumes level poses (roll
    and pitch zero); yaw is handled exactly.
    """
    res = grid.resolution
    half = grid.span_m / 2.0
    pixels = np.zeros((grid.height_px, grid.width_px), dtype=np.uint8)
    painted = np.zeros_like(pixels, dtype=bool)
    world_to_radar = inverse(pose_to_matrix(pose))
    order = sorted(
        range(len(world.boxes)),
        key=lambda i: (-world.boxes[i].max_corner[2], -world.boxes[i].reflectivity, i),
    )
    for i in order:
        box = world.boxes[i]
        quad = _footprint_quad(box, world_to_radar)
        xs, ys = quad[:, 0], quad[:, 1]
        # pixel window covering the quad's bounding box
        v0 = max(0, int(np.floor((half - xs.max()) / res)))
        v1 = min(grid.height_px - 1, int(np.floor((half - xs.min()) / res)))
        u0 = max(0, int(np.floor((half - ys.max()) / res)))
        u1 = min(grid.width_px - 1, int(np.floor((half - ys.min()) / res)))
        if v0 > v1 or u0 > u1:
            continue
        vv, uu = np.mgrid[v0 : v1 + 1, u0 : u1 + 1]
        ccx = half - (vv + 0.5) * res
        ccy = half - (uu + 0.5) * res
        axes = [(1.0, 0.0), (0.0, 1.0)]
        for k in range(2):  # two edge directions of the parallelogram
            ex, ey = quad[k + 1] - quad[k]
            axes.append((-ey, ex))
        overlap = np.ones(vv.shape, dtype=bool)
        for nx, ny in axes:
            proj = xs * nx + ys * ny
            qmin, qmax = proj.min(), proj.max()
            pc = ccx * nx + ccy * ny
            r = (abs(nx) + abs(ny)) * res / 2.0
            overlap &= (qmin < pc + r) & (pc - r < qmax)
        gray = np.uint8(math.floor(255.0 * box.reflectivity + 0.5))
        window = np.s_[v0 : v1 + 1, u0 : u1 + 1]
        chosen = overlap & ~painted[window]
        pixels[window][chosen] = gray
        painted[window] |= overlap
    pixels.setflags(write=False)
    return BevImage(grid, pixels)


# ---------------------------------------------------------------------------
# radar degradation


def render_radar(bev_truth: BevImage, model: RadarModel) -> BevImage:
    """Gaussian blur, multiplicative speckle, clamp, 8-bit quantize."""
    f = gaussian_filter(
        bev_truth.pixels.astype(np.float64),
        sigma=model.blur_sigma_px,
        mode="reflect",
        truncate=3.0,
    )
    rng = np.random.Generator(np.random.PCG64(model.seed))
    noise = rng.normal(0.0, model.speckle_sigma, size=f.shape) if model.speckle_sigma > 0 else 0.0
    out = np.clip(f * (1.0 + noise), 0.0, 255.0)
    quantized = np.floor(out + 0.5).astype(np.uint8)
    quantized.setflags(write=False)
    return BevImage(bev_truth.spec, quantized)


# ---------------------------------------------------------------------------
# full dataset


def generate_dataset(
    world: World,
    trajectory: PoseTrack,
    models: SynthModels,
    grid: BevGridSpec,
    out_dir,
) -> PairManifest:
    """Write a complete pair dataset for a trajectory through a world.

    Layout under out_dir: radar/<ts>.png (degraded analytic truth, the
    input image), gt/<ts>.pgm (the real accumulate/crop/project path over
    the ray-cast scans), analytic/<ts>.pgm (exact truth for
    cross-checks), manifest.jsonl. The speckle seed advances by one per
    frame so frames differ but the whole dataset replays byte-identically.
    """
    out_dir = Path(out_dir)
    radar_dir = out_dir / "radar"
    analytic_dir = out_dir / "analytic"
    radar_dir.mkdir(parents=True, exist_ok=True)
    analytic_dir.mkdir(parents=True, exist_ok=True)
    scans = []
    radar_frames = []
    for i, pose in enumerate(trajectory.poses):
        scans.append((raycast_scan(world, pose, models.lidar), pose))
        truth = analytic_bev(world, pose, grid)
        imageio.write_pgm(analytic_dir / f"{pose.timestamp_ns}.pgm", truth.pixels)
        degraded = render_radar(truth, replace(models.radar, seed=models.radar.seed + i))
        radar_path = radar_dir / f"{pose.timestamp_ns}.png"
        imageio.write_png(radar_path, degraded.pixels)
        radar_frames.append((str(radar_path), pose.timestamp_ns))
    map_cloud = accumulate_map(scans, models.voxel)
    manifest = build_pairs(
        radar_frames, trajectory, map_cloud, np.eye(4), grid, out_dir
    )
    write_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest
