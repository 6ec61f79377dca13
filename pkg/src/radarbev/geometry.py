"""SE(3) poses and rigid transforms shared by the whole pipeline.

Conventions: rotations are intrinsic yaw-pitch-roll, R = Rz(yaw) @ Ry(pitch)
@ Rx(roll); transforms are active (points move, frames stay); angles are
radians. A transform is represented as a 4x4 float64 matrix whose last row
is exactly (0, 0, 0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPoseError

ROTATION_TOL = 1e-9


@dataclass(frozen=True)
class Pose:
    """Timestamped vehicle pose: translation in meters, attitude in radians."""

    timestamp_ns: int
    x: float
    y: float
    z: float
    roll: float
    pitch: float
    yaw: float

    def __post_init__(self) -> None:
        values = (self.x, self.y, self.z, self.roll, self.pitch, self.yaw)
        if not all(math.isfinite(v) for v in values):
            raise InvalidPoseError(f"non-finite pose field in {values}")
        if self.timestamp_ns < 0:
            raise InvalidPoseError(f"negative timestamp {self.timestamp_ns}")

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


def pose_to_matrix(pose: Pose) -> np.ndarray:
    """4x4 matrix mapping points from the pose's local frame to the global frame."""
    if not isinstance(pose, Pose):
        raise InvalidPoseError(f"expected Pose, got {type(pose).__name__}")
    cr, sr = math.cos(pose.roll), math.sin(pose.roll)
    cp, sp = math.cos(pose.pitch), math.sin(pose.pitch)
    cy, sy = math.cos(pose.yaw), math.sin(pose.yaw)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    m = np.eye(4, dtype=np.float64)
    m[:3, :3] = rz @ ry @ rx
    m[:3, 3] = (pose.x, pose.y, pose.z)
    return m


def check_affine(m: np.ndarray) -> np.ndarray:
    """Validate a rigid 4x4 affine matrix and return it as float64."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (4, 4):
        raise ValueError(f"affine matrix must be 4x4, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("affine matrix has non-finite entries")
    if not np.array_equal(m[3], np.array([0.0, 0.0, 0.0, 1.0])):
        raise ValueError(f"last row must be (0,0,0,1), got {m[3]}")
    r = m[:3, :3]
    if not np.allclose(r.T @ r, np.eye(3), atol=ROTATION_TOL, rtol=0.0):
        raise ValueError("rotation block is not orthonormal")
    if abs(np.linalg.det(r) - 1.0) > ROTATION_TOL:
        raise ValueError("rotation block determinant is not 1")
    return m


def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Chain two rigid transforms; the result applies ``b`` first, then ``a``."""
    a = check_affine(a)
    b = check_affine(b)
    return a @ b


def inverse(m: np.ndarray) -> np.ndarray:
    """Invert a rigid transform as (R^T, -R^T t); never a general inversion."""
    m = check_affine(m)
    r = m[:3, :3]
    out = np.eye(4, dtype=np.float64)
    out[:3, :3] = r.T
    out[:3, 3] = -(r.T @ m[:3, 3])
    return out


def transform_points(m: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Apply a rigid transform to an (N, 3) array of points."""
    points = np.asarray(points, dtype=np.float64)
    return points @ m[:3, :3].T + m[:3, 3]
