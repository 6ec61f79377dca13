"""Command-line pipeline frontend.

Subcommands: build-map, make-pairs, metrics, synth, grid. Machine
output (JSON) goes to standard output; human-readable tables and
warnings go to standard error. Exit codes: 0 success, 1 usage error,
2 data error. Common flags may also come from a JSON config file
(--config); explicit flags override it.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import imageio, metrics, pairing, synth
from .errors import IngestionError, RadarBevError
from .geometry import check_affine
from .pointcloud import VoxelSpec, accumulate_map
from .projection import BevGridSpec

log = logging.getLogger(__name__)

_CONFIG_KEYS = (
    "dataset_root",
    "grid_span",
    "grid_px",
    "voxel_leaf",
    "crop_half",
    "max_gap_ms",
    "seed",
    "train_fraction",
)
_DEFAULTS = {
    "dataset_root": None,
    "grid_span": 200.0,
    "grid_px": 256,
    "voxel_leaf": 0.8,
    "crop_half": 100.0,
    "max_gap_ms": 500.0,
    "seed": 0,
    "train_fraction": None,
}


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default flag values")
    p.add_argument("--dataset-root", help="base directory for relative input paths")
    p.add_argument("--grid-span", type=float, help="BEV span in meters (default 200)")
    p.add_argument("--grid-px", type=int, help="BEV raster size in pixels (default 256)")
    p.add_argument("--voxel-leaf", type=float, help="voxel filter leaf size in m (default 0.8)")
    p.add_argument("--crop-half", type=float, help="map crop half extent in m (default 100)")
    p.add_argument("--max-gap-ms", type=float, help="pose match tolerance in ms (default 500)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--train-fraction", type=float, help="train split fraction (no split if unset)")


def build_parser() -> _Parser:
    parser = _Parser(prog="radarbev", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-map", parents=[], help="accumulate posed scans into a map file")
    p.add_argument("scans_dir", help="directory of <timestamp_ns>.pcbf scans")
    p.add_argument("poses_csv", help="pose track CSV")
    p.add_argument("out_map", help="output map file (.pcbf)")
    _add_common(p)

    p = sub.add_parser("make-pairs", help="crop and project the map into per-frame gt images")
    p.add_argument("map", help="map point-cloud file (.pcbf)")
    p.add_argument("poses_csv", help="pose track CSV")
    p.add_argument("radar_dir", help="directory of <timestamp_ns>.png|.pgm radar images")
    p.add_argument("out_dir", help="output directory (gt images + manifest)")
    p.add_argument("--extrinsic", help="JSON file with a 4x4 lidar-to-radar transform")
    _add_common(p)

    p = sub.add_parser("metrics", help="score candidate images against manifest ground truth")
    p.add_argument("manifest", help="pair manifest path")
    p.add_argument("candidate_dir", help="directory of candidate images named by gt stem")
    p.add_argument("--split", choices=["train", "test"], help="restrict to one split")
    _add_common(p)

    p = sub.add_parser("synth", help="generate a synthetic paired dataset")
    p.add_argument("world_json", help="world description JSON")
    p.add_argument("trajectory_csv", help="pose track CSV")
    p.add_argument("out_dir", help="output dataset directory")
    _add_common(p)

    p = sub.add_parser("grid", help="tile input/enhanced/gt images into one comparison image")
    p.add_argument("manifest", help="pair manifest path")
    p.add_argument("out_png", help="output image path")
    p.add_argument("--enhanced", help="directory of enhanced images named by gt stem")
    p.add_argument("--count", type=int, default=4, help="number of pairs to tile (default 4)")
    _add_common(p)

    return parser


def _settings(args: argparse.Namespace) -> dict:
    """Builtin defaults, overlaid by the config file, overlaid by flags."""
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise IngestionError(f"{path}: no such config file")
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise IngestionError(f"{path}: bad config JSON: {exc}") from exc
        unknown = set(loaded) - set(_CONFIG_KEYS)
        if unknown:
            raise IngestionError(f"{path}: unknown config keys {sorted(unknown)}")
        merged.update(loaded)
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _resolve_path(value: str, settings: dict) -> Path:
    p = Path(value)
    root = settings["dataset_root"]
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def _grid(settings: dict) -> BevGridSpec:
    return BevGridSpec(
        width_px=settings["grid_px"], height_px=settings["grid_px"], span_m=settings["grid_span"]
    )


def _max_gap_ns(settings: dict) -> int:
    return int(settings["max_gap_ms"] * 1e6)


def _emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def cmd_build_map(args: argparse.Namespace) -> int:
    settings = _settings(args)
    scans_dir = _resolve_path(args.scans_dir, settings)
    poses_csv = _resolve_path(args.poses_csv, settings)
    if not scans_dir.is_dir():
        print(f"error: {scans_dir}: no such directory", file=sys.stderr)
        return 2
    scan_paths = sorted(scans_dir.glob("*.pcbf"))
    if not scan_paths:
        print(f"error: no scans found in {scans_dir}", file=sys.stderr)
        return 2
    track = pairing.read_pose_csv(poses_csv)
    gap = _max_gap_ns(settings)
    scans = []
    for path in scan_paths:
        try:
            ts = int(path.stem)
        except ValueError:
            raise IngestionError(f"{path}: file name is not a timestamp") from None
        pose = pairing.nearest_pose(track, ts, gap)
        scans.append((pairing.read_pcbf(path, frame_id="lidar"), pose))
    leaf = settings["voxel_leaf"]
    map_cloud = accumulate_map(scans, VoxelSpec(leaf, leaf, leaf))
    out_map = _resolve_path(args.out_map, settings)
    out_map.parent.mkdir(parents=True, exist_ok=True)
    pairing.write_pcbf(out_map, map_cloud)
    doc = {"points": len(map_cloud), "scans": len(scans), "out": str(out_map)}
    if len(map_cloud):
        doc["extent"] = {
            "min": map_cloud.xyz.min(axis=0).tolist(),
            "max": map_cloud.xyz.max(axis=0).tolist(),
        }
    _emit(doc)
    return 0


def _load_extrinsic(path) -> np.ndarray:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    m = np.asarray(raw, dtype=np.float64)
    if m.shape == (16,):
        m = m.reshape(4, 4)
    try:
        return check_affine(m)
    except RadarBevError as exc:
        raise IngestionError(f"{path}: bad extrinsic: {exc}") from exc


def cmd_make_pairs(args: argparse.Namespace) -> int:
    settings = _settings(args)
    map_path = _resolve_path(args.map, settings)
    poses_csv = _resolve_path(args.poses_csv, settings)
    radar_dir = _resolve_path(args.radar_dir, settings)
    missing = [str(p) for p in (map_path, poses_csv) if not p.is_file()]
    if not radar_dir.is_dir():
        missing.append(str(radar_dir))
    if missing:
        print("error: missing inputs: " + ", ".join(missing), file=sys.stderr)
        return 2
    map_cloud = pairing.read_pcbf(map_path, frame_id="map")
    track = pairing.read_pose_csv(poses_csv)
    frames = pairing.find_radar_frames(radar_dir)
    if not frames:
        print(f"warning: no radar images in {radar_dir}, writing empty manifest", file=sys.stderr)
    extrinsic = _load_extrinsic(args.extrinsic) if args.extrinsic else np.eye(4)
    out_dir = _resolve_path(args.out_dir, settings)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = pairing.build_pairs(
        frames,
        track,
        map_cloud,
        extrinsic,
        _grid(settings),
        out_dir,
        max_gap_ns=_max_gap_ns(settings),
        map_crop_half_m=settings["crop_half"],
    )
    if settings["train_fraction"] is not None:
        manifest = pairing.split_manifest(manifest, settings["train_fraction"], settings["seed"])
    manifest_path = out_dir / "manifest.jsonl"
    pairing.write_manifest(manifest, manifest_path)
    _emit(
        {
            "pairs": len(manifest.records),
            "skipped": len(frames) - len(manifest.records),
            "manifest": str(manifest_path),
        }
    )
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    settings = _settings(args)
    manifest = pairing.read_manifest(_resolve_path(args.manifest, settings))
    report = metrics.evaluate_pairs(
        manifest, _resolve_path(args.candidate_dir, settings), split=args.split
    )
    print(report.to_json())
    rows = [
        ("images", f"{report.n_images}"),
        ("psnr mean (dB)", "inf" if report.psnr_db == float("inf") else f"{report.psnr_db:.4f}"),
        ("psnr inf count", f"{report.psnr_inf_count}"),
        ("ssim mean", f"{report.ssim:.4f}"),
        ("rmi mean", f"{report.rmi:.4f}"),
    ]
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {value}", file=sys.stderr)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    settings = _settings(args)
    world = synth.read_world_json(_resolve_path(args.world_json, settings))
    track = pairing.read_pose_csv(_resolve_path(args.trajectory_csv, settings))
    leaf = settings["voxel_leaf"]
    models = synth.SynthModels(
        radar=synth.RadarModel(seed=settings["seed"]),
        voxel=VoxelSpec(leaf, leaf, leaf),
    )
    out_dir = _resolve_path(args.out_dir, settings)
    manifest = synth.generate_dataset(world, track, models, _grid(settings), out_dir)
    if settings["train_fraction"] is not None:
        manifest = pairing.split_manifest(manifest, settings["train_fraction"], settings["seed"])
        pairing.write_manifest(manifest, out_dir / "manifest.jsonl")
    _emit({"pairs": len(manifest.records), "out_dir": str(out_dir)})
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    settings = _settings(args)
    manifest = pairing.read_manifest(_resolve_path(args.manifest, settings))
    records = manifest.records[: max(0, args.count)]
    if not records:
        print("error: manifest has no records to tile", file=sys.stderr)
        return 2
    enhanced_dir = Path(args.enhanced) if args.enhanced else None

    def find_enhanced(stem: str) -> Path | None:
        if enhanced_dir is None:
            return None
        for ext in (".png", ".pgm"):
            p = enhanced_dir / (stem + ext)
            if p.is_file():
                return p
        return None

    columns = []
    have_enhanced = enhanced_dir is not None and all(
        find_enhanced(Path(r.gt_path).stem) is not None for r in records
    )
    if enhanced_dir is not None and not have_enhanced:
        print(f"warning: not all pairs have images under {enhanced_dir}, "
              "tiling input and gt only", file=sys.stderr)
    for rec in records:
        gt = imageio.read_image(manifest.resolve(rec.gt_path))
        th, tw = gt.shape
        radar = imageio.read_image(manifest.resolve(rec.radar_path))
        if radar.shape != gt.shape:
            radar = imageio.resize_bilinear(radar, tw, th)
        column = [radar]
        if have_enhanced:
            enh = imageio.read_image(find_enhanced(Path(rec.gt_path).stem))
            if enh.shape != gt.shape:
                enh = imageio.resize_bilinear(enh, tw, th)
            column.append(enh)
        column.append(gt)
        columns.append(column)
    shapes = {img.shape for col in columns for img in col}
    if len(shapes) != 1:
        print(f"error: mixed ground-truth sizes {sorted(shapes)}", file=sys.stderr)
        return 2
    th, tw = next(iter(shapes))
    n_rows = len(columns[0])
    n_cols = len(columns)
    sep = 2
    canvas = np.full(
        (n_rows * th + (n_rows - 1) * sep, n_cols * tw + (n_cols - 1) * sep), 255, dtype=np.uint8
    )
    for c, column in enumerate(columns):
        for r, img in enumerate(column):
            y = r * (th + sep)
            x = c * (tw + sep)
            canvas[y : y + th, x : x + tw] = img
    out_path = _resolve_path(args.out_png, settings)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if out_path.suffix.lower() == ".pgm":
        imageio.write_pgm(out_path, canvas)
    else:
        imageio.write_png(out_path, canvas)
    _emit({"rows": n_rows, "cols": n_cols, "out": str(out_path)})
    return 0


_HANDLERS = {
    "build-map": cmd_build_map,
    "make-pairs": cmd_make_pairs,
    "metrics": cmd_metrics,
    "synth": cmd_synth,
    "grid": cmd_grid,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (RadarBevError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
