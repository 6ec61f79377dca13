"""LiDAR-assisted radar BEV ground-truth pipeline.

Builds point-cloud maps from posed LiDAR scans, crops and projects them
into pixel-aligned bird's-eye-view images paired with radar frames, and
evaluates enhancement candidates with PSNR, SSIM, and regional mutual
information. A synthetic box-world module provides closed-form truth
for end-to-end verification.
"""

from .augment import AugmentConfig, AugmentedPair, augment_pair
from .errors import (
    BoundsError,
    EmptyInputError,
    FrameMismatchError,
    GapExceededError,
    IngestionError,
    InvalidPoseError,
    PoseInsideObjectError,
    RadarBevError,
    ShapeError,
)
from .geometry import Pose, compose, inverse, pose_to_matrix, transform_points
from .metrics import MetricReport, evaluate_pairs, psnr, rmi, ssim
from .pairing import (
    PairManifest,
    PairRecord,
    PoseTrack,
    build_pairs,
    nearest_pose,
    read_manifest,
    read_pcbf,
    read_pose_csv,
    split_manifest,
    write_manifest,
    write_pcbf,
    write_pose_csv,
)
from .pointcloud import CropSpec, PointCloud, VoxelSpec, accumulate_map, crop_box, voxel_filter
from .projection import BevGridSpec, BevImage, project_bev, project_scan, to_radar_frame
from .synth import (
    Box,
    LidarModel,
    RadarModel,
    SynthModels,
    World,
    analytic_bev,
    generate_dataset,
    raycast_scan,
    read_world_json,
    render_radar,
    write_world_json,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "AugmentedPair",
    "BevGridSpec",
    "BevImage",
    "BoundsError",
    "Box",
    "CropSpec",
    "EmptyInputError",
    "FrameMismatchError",
    "GapExceededError",
    "IngestionError",
    "InvalidPoseError",
    "LidarModel",
    "MetricReport",
    "PairManifest",
    "PairRecord",
    "PointCloud",
    "Pose",
    "PoseInsideObjectError",
    "PoseTrack",
    "RadarBevError",
    "RadarModel",
    "ShapeError",
    "SynthModels",
    "VoxelSpec",
    "World",
    "accumulate_map",
    "analytic_bev",
    "augment_pair",
    "build_pairs",
    "compose",
    "crop_box",
    "evaluate_pairs",
    "generate_dataset",
    "inverse",
    "nearest_pose",
    "pose_to_matrix",
    "project_bev",
    "project_scan",
    "psnr",
    "raycast_scan",
    "read_manifest",
    "read_pcbf",
    "read_pose_csv",
    "read_world_json",
    "render_radar",
    "rmi",
    "split_manifest",
    "ssim",
    "to_radar_frame",
    "transform_points",
    "voxel_filter",
    "write_manifest",
    "write_pcbf",
    "write_pose_csv",
    "write_world_json",
]
