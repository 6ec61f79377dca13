"""Dataset ingestion, nearest-pose lookup, pair generation, split management.

File formats owned by this module:

* Pose track: CSV with header ``timestamp_ns,x,y,z,roll,pitch,yaw``,
  angles in radians, one row per pose, timestamps strictly increasing.
* Point cloud: binary little-endian, magic ``PCBF``, u32 version=1,
  u64 count, then count records of 4 float32 (x, y, z, intensity).
  Intensities outside [0, 1] are min-max normalized per file; NaN is an
  error.
* Pair manifest: UTF-8 line-delimited JSON. The first line is a header
  carrying the grid spec; each following line is one pair record. Paths
  are stored relative to the manifest's directory.
"""

from __future__ import annotations

import csv
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import geometry, imageio
from .errors import EmptyInputError, GapExceededError, IngestionError
from .geometry import Pose
from .pointcloud import CropSpec, PointCloud, crop_box
from .projection import BevGridSpec, project_bev, to_radar_frame

log = logging.getLogger(__name__)

DEFAULT_MAX_GAP_NS = 500_000_000  # radar frames arrive far faster than this

POSE_CSV_HEADER = ["timestamp_ns", "x", "y", "z", "roll", "pitch", "yaw"]
PCBF_MAGIC = b"PCBF"
PCBF_VERSION = 1
MANIFEST_FORMAT = "bev-pair-manifest"


@dataclass(frozen=True)
class PoseTrack:
    """Poses sorted strictly ascending by timestamp."""

    poses: tuple[Pose, ...]

    def __post_init__(self) -> None:
        if not self.poses:
            raise EmptyInputError("pose track is empty")
        times = [p.timestamp_ns for p in self.poses]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("pose timestamps must be strictly increasing")

    @property
    def timestamps_ns(self) -> np.ndarray:
        return np.array([p.timestamp_ns for p in self.poses], dtype=np.int64)


@dataclass(frozen=True)
class PairRecord:
    radar_path: str
    gt_path: str
    timestamp_ns: int
    pose: Pose
    split: str = "train"

    def __post_init__(self) -> None:
        if not self.radar_path or not self.gt_path:
            raise ValueError("pair record paths must be non-empty")
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be train or test, got {self.split!r}")


@dataclass(frozen=True)
class PairManifest:
    grid: BevGridSpec
    records: tuple[PairRecord, ...]
    base_dir: Path | None = None

    def __post_init__(self) -> None:
        times = [r.timestamp_ns for r in self.records]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("manifest records must be in non-decreasing timestamp order")

    def resolve(self, rel_path: str) -> Path:
        base = self.base_dir if self.base_dir is not None else Path(".")
        return base / rel_path


def nearest_pose(track: PoseTrack, query_ns: int, max_gap_ns: int = DEFAULT_MAX_GAP_NS) -> Pose:
    """Pose minimizing |timestamp - query|; an exact midpoint picks the earlier one."""
    if max_gap_ns <= 0:
        raise ValueError(f"max_gap_ns must be positive, got {max_gap_ns}")
    times = track.timestamps_ns
    i = int(np.searchsorted(times, query_ns))
    best = None
    best_gap = None
    for j in (i - 1, i):
        if 0 <= j < len(times):
            gap = abs(int(times[j]) - int(query_ns))
            # strict < keeps the earlier pose on an exact midpoint
            if best_gap is None or gap < best_gap:
                best, best_gap = j, gap
    if best_gap > max_gap_ns:
        raise GapExceededError(
            f"nearest pose is {best_gap} ns from query {query_ns}, limit {max_gap_ns} ns"
        )
    return track.poses[best]


def build_pairs(
    radar_frames: Sequence[tuple[str, int]],
    track: PoseTrack,
    map_cloud: PointCloud,
    extrinsic: np.ndarray,
    grid: BevGridSpec,
    out_dir,
    max_gap_ns: int = DEFAULT_MAX_GAP_NS,
    map_crop_half_m: float | None = None,
) -> PairManifest:
    """Generate one ground-truth BEV image per radar frame.

    Per frame: look up the timestamp-nearest pose, crop the map in a box
    centered on that pose (half extent map_crop_half_m, default half the
    grid span), move the crop into the radar frame (extrinsic composed
    with the inverse pose), re-crop to the raster span (rotation can push
    map-frame corners outside it), rasterize, and write
    ``gt/<timestamp_ns>.pgm``. Frames with no pose within ``max_gap_ns``
    are skipped with a warning.
    """
    out_dir = Path(out_dir)
    gt_dir = out_dir / "gt"
    gt_dir.mkdir(parents=True, exist_ok=True)
    half = grid.span_m / 2.0
    crop_half = half if map_crop_half_m is None else map_crop_half_m
    records = []
    skipped = 0
    for radar_path, ts in sorted(radar_frames, key=lambda f: f[1]):
        try:
            pose = nearest_pose(track, ts, max_gap_ns)
        except GapExceededError as exc:
            log.warning("skipping radar frame %s: %s", radar_path, exc)
            skipped += 1
            continue
        local = crop_box(
            map_cloud,
            CropSpec(
                center=(pose.x, pose.y, pose.z),
                half_extent_x=crop_half,
                half_extent_y=crop_half,
            ),
        )
        world_to_radar = geometry.compose(extrinsic, geometry.inverse(geometry.pose_to_matrix(pose)))
        in_radar = to_radar_frame(local, world_to_radar)
        in_radar = crop_box(in_radar, CropSpec(half_extent_x=half, half_extent_y=half))
        image = project_bev(in_radar, grid)
        if len(in_radar) == 0:
            log.warning("radar frame %s: empty crop, all-zero ground truth", radar_path)
        gt_path = gt_dir / f"{ts}.pgm"
        imageio.write_pgm(gt_path, image.pixels)
        records.append(
            PairRecord(
                radar_path=_relativize(radar_path, out_dir),
                gt_path=str(gt_path.relative_to(out_dir)),
                timestamp_ns=ts,
                pose=pose,
            )
        )
    if skipped:
        log.warning("skipped %d of %d radar frames with no usable pose", skipped, len(radar_frames))
    return PairManifest(grid=grid, records=tuple(records), base_dir=out_dir)


def split_manifest(manifest: PairManifest, train_fraction: float, seed: int) -> PairManifest:
    """Seeded random split; round-half-up of fraction*N records become train."""
    if not (0.0 < train_fraction < 1.0):
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(manifest.records)
    n_train = int(np.floor(train_fraction * n + 0.5))
    rng = np.random.Generator(np.random.PCG64(seed))
    train_idx = set(rng.permutation(n)[:n_train].tolist())
    records = tuple(
        PairRecord(
            radar_path=r.radar_path,
            gt_path=r.gt_path,
            timestamp_ns=r.timestamp_ns,
            pose=r.pose,
            split="train" if i in train_idx else "test",
        )
        for i, r in enumerate(manifest.records)
    )
    return PairManifest(grid=manifest.grid, records=records, base_dir=manifest.base_dir)


def _relativize(path, base: Path) -> str:
    try:
        return str(Path(path).resolve().relative_to(base.resolve()))
    except ValueError:
        return str(Path(path))


# ---------------------------------------------------------------------------
# pose CSV


def read_pose_csv(path) -> PoseTrack:
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"{path}: no such file")
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty pose file") from None
        if [h.strip() for h in header] != POSE_CSV_HEADER:
            raise IngestionError(f"{path}: bad header {header}, want {POSE_CSV_HEADER}")
        poses = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                poses.append(
                    Pose(
                        timestamp_ns=int(row[0]),
                        x=float(row[1]),
                        y=float(row[2]),
                        z=float(row[3]),
                        roll=float(row[4]),
                        pitch=float(row[5]),
                        yaw=float(row[6]),
                    )
                )
            except (IndexError, ValueError) as exc:
                raise IngestionError(f"{path}: line {lineno}: {exc}") from exc
    try:
        return PoseTrack(tuple(poses))
    except (ValueError, EmptyInputError) as exc:
        raise IngestionError(f"{path}: {exc}") from exc


def write_pose_csv(path, track: PoseTrack) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(POSE_CSV_HEADER)
        for p in track.poses:
            writer.writerow([p.timestamp_ns, repr(p.x), repr(p.y), repr(p.z),
                             repr(p.roll), repr(p.pitch), repr(p.yaw)])


# ---------------------------------------------------------------------------
# PCBF point-cloud files


def read_pcbf(path, frame_id: str = "lidar") -> PointCloud:
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"{path}: no such file")
    data = path.read_bytes()
    if len(data) < 16 or data[:4] != PCBF_MAGIC:
        raise IngestionError(f"{path}: not a PCBF file")
    version, count = struct.unpack_from("<IQ", data, 4)
    if version != PCBF_VERSION:
        raise IngestionError(f"{path}: unsupported PCBF version {version}")
    expected = 16 + count * 16
    if len(data) != expected:
        raise IngestionError(f"{path}: size {len(data)} != expected {expected}")
    raw = np.frombuffer(data, dtype="<f4", offset=16).reshape(count, 4).astype(np.float64)
    if not np.all(np.isfinite(raw)):
        raise IngestionError(f"{path}: NaN or Inf in point data")
    inten = raw[:, 3]
    if count and (inten.min() < 0.0 or inten.max() > 1.0):
        lo, hi = inten.min(), inten.max()
        raw[:, 3] = (inten - lo) / (hi - lo) if hi > lo else 0.0
        log.info("%s: intensities [%g, %g] min-max normalized to [0, 1]", path, lo, hi)
    return PointCloud(frame_id, raw)


def write_pcbf(path, cloud: PointCloud) -> None:
    pts = cloud.points.astype("<f4")
    with open(path, "wb") as f:
        f.write(PCBF_MAGIC)
        f.write(struct.pack("<IQ", PCBF_VERSION, pts.shape[0]))
        f.write(pts.tobytes())


# ---------------------------------------------------------------------------
# radar image ingestion


def load_radar_image(path, grid: BevGridSpec) -> np.ndarray:
    """Load an 8-bit grayscale radar image, resampling to the grid if needed."""
    pixels = imageio.read_image(path)
    if pixels.shape != (grid.height_px, grid.width_px):
        log.info(
            "%s: resampling %sx%s radar image to %sx%s",
            path, pixels.shape[1], pixels.shape[0], grid.width_px, grid.height_px,
        )
        pixels = imageio.resize_bilinear(pixels, grid.width_px, grid.height_px)
    return pixels


def find_radar_frames(radar_dir) -> list[tuple[str, int]]:
    """List ``<timestamp_ns>.png|.pgm`` files in a directory, sorted by time."""
    radar_dir = Path(radar_dir)
    if not radar_dir.is_dir():
        raise IngestionError(f"{radar_dir}: no such directory")
    frames = []
    for p in sorted(radar_dir.iterdir()):
        if p.suffix.lower() not in (".png", ".pgm"):
            continue
        try:
            ts = int(p.stem)
        except ValueError:
            raise IngestionError(f"{p}: file name is not a timestamp") from None
        frames.append((str(p), ts))
    frames.sort(key=lambda f: f[1])
    return frames


# ---------------------------------------------------------------------------
# manifest serialization


def _grid_to_json(grid: BevGridSpec) -> dict:
    return {"width_px": grid.width_px, "height_px": grid.height_px, "span_m": grid.span_m}


def _pose_to_json(pose: Pose) -> dict:
    return {
        "timestamp_ns": pose.timestamp_ns,
        "x": pose.x, "y": pose.y, "z": pose.z,
        "roll": pose.roll, "pitch": pose.pitch, "yaw": pose.yaw,
    }


def write_manifest(manifest: PairManifest, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        header = {
            "format": MANIFEST_FORMAT,
            "version": 1,
            "grid": _grid_to_json(manifest.grid),
        }
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for r in manifest.records:
            row = {
                "radar_path": r.radar_path,
                "gt_path": r.gt_path,
                "timestamp_ns": r.timestamp_ns,
                "pose": _pose_to_json(r.pose),
                "split": r.split,
            }
            f.write(json.dumps(row, sort_keys=True) + "\n")


def read_manifest(path) -> PairManifest:
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"{path}: no such file")
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise IngestionError(f"{path}: empty manifest")
    try:
        header = json.loads(lines[0])
        if header.get("format") != MANIFEST_FORMAT:
            raise ValueError(f"unknown format {header.get('format')!r}")
        g = header["grid"]
        grid = BevGridSpec(width_px=g["width_px"], height_px=g["height_px"], span_m=g["span_m"])
    except (ValueError, KeyError, TypeError) as exc:
        raise IngestionError(f"{path}: line 1: bad header: {exc}") from exc
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            pose = Pose(**row["pose"])
            records.append(
                PairRecord(
                    radar_path=row["radar_path"],
                    gt_path=row["gt_path"],
                    timestamp_ns=row["timestamp_ns"],
                    pose=pose,
                    split=row["split"],
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise IngestionError(f"{path}: line {lineno}: {exc}") from exc
    return PairManifest(grid=grid, records=tuple(records), base_dir=path.parent)
