"""Camera model, rigid transforms, vehicle trajectories, stereo triangulation.

Conventions used throughout the package:

* World frame: x east, y north, z up.  Heading is the yaw of the camera's
  optical axis, measured counterclockwise from +x.
* Camera frame: x right, y down, z forward (optical axis).  A trajectory
  pose is camera-to-world: ``p_world = R @ p_cam + t``.
* Depth Z is the camera-frame z coordinate; disparity d relates to it by
  ``Z = fx * baseline / d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .disparity import DisparityMap
from .errors import (
    DegenerateInputError,
    InvalidDisparityError,
    InvalidInputError,
)
from .skeleton.pose import Skeleton2D, Skeleton3D

EARTH_RADIUS_M = 6_371_000.0
DEFAULT_MIN_DISPARITY_PX = 0.25
DEFAULT_JOINT_WINDOW_PX = 5


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    baseline: float  # stereo baseline, m
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidInputError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.baseline <= 0:
            raise InvalidInputError(f"baseline must be positive, got {self.baseline}")
        if self.width <= 0 or self.height <= 0:
            raise InvalidInputError(f"image size must be positive, got {self.width}x{self.height}")
        if not (0 <= self.cx < self.width):
            raise InvalidInputError(f"cx={self.cx} outside [0, {self.width})")
        if not (0 <= self.cy < self.height):
            raise InvalidInputError(f"cy={self.cy} outside [0, {self.height})")


def heading_rotation(heading: float) -> np.ndarray:
    """Camera-to-world rotation of a level camera facing the given heading."""
    s, c = math.sin(heading), math.cos(heading)
    # Columns are the camera's right, down, forward axes expressed in world.
    return np.array([
        [s, 0.0, c],
        [-c, 0.0, s],
        [0.0, -1.0, 0.0],
    ])


@dataclass(frozen=True)
class RigidPose:
    """Rigid transform: rotation (3x3, det +1) plus translation (m)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64)
        translation = np.array(self.translation, dtype=np.float64)
        if rotation.shape != (3, 3):
            raise InvalidInputError(f"rotation must be 3x3, got {rotation.shape}")
        if translation.shape != (3,):
            raise InvalidInputError(f"translation must be a 3-vector, got {translation.shape}")
        if np.abs(rotation.T @ rotation - np.eye(3)).max() > 1e-9:
            raise InvalidInputError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(rotation) - 1.0) > 1e-9:
            raise InvalidInputError("rotation determinant must be +1 within 1e-9")
        rotation.flags.writeable = False
        translation.flags.writeable = False
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_heading(cls, heading: float, position) -> "RigidPose":
        return cls(heading_rotation(heading), np.asarray(position, dtype=np.float64))

    @property
    def heading(self) -> float:
        """Yaw of the camera forward axis in the world xy-plane."""
        forward = self.rotation[:, 2]
        return math.atan2(forward[1], forward[0])

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform (3,) or (N, 3) points."""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def inverse(self) -> "RigidPose":
        return RigidPose(self.rotation.T, -self.rotation.T @ self.translation)


@dataclass(frozen=True)
class OdometrySample:
    timestamp: float
    speed: float      # m/s, forward
    yaw_rate: float   # rad/s, counterclockwise

    def __post_init__(self):
        if self.speed < 0:
            raise InvalidInputError(f"speed must be non-negative, got {self.speed}")


@dataclass(frozen=True)
class GpsSample:
    timestamp: float
    latitude: float   # deg
    longitude: float  # deg

    def __post_init__(self):
        if abs(self.latitude) > 90:
            raise InvalidInputError(f"latitude {self.latitude} outside [-90, 90]")
        if abs(self.longitude) > 180:
            raise InvalidInputError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass
class Trajectory:
    """Per-frame world pose of the stereo rig."""

    timestamps: np.ndarray
    poses: tuple[RigidPose, ...]
    source: str  # "odometry" | "gps"

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        self.poses = tuple(self.poses)
        if len(self.poses) == 0:
            raise InvalidInputError("trajectory must contain at least one pose")
        if self.timestamps.shape != (len(self.poses),):
            raise InvalidInputError("one timestamp required per pose")
        if np.any(np.diff(self.timestamps) <= 0):
            raise InvalidInputError("trajectory timestamps must be strictly increasing")
        if self.source not in ("odometry", "gps"):
            raise InvalidInputError(f"unknown trajectory source {self.source!r}")

    def __len__(self) -> int:
        return len(self.poses)

    def __iter__(self):
        return iter(zip(self.timestamps, self.poses))

    def positions(self) -> np.ndarray:
        return np.array([pose.translation for pose in self.poses])


def _check_monotonic(timestamps: np.ndarray) -> None:
    if np.any(np.diff(timestamps) <= 0):
        raise InvalidInputError("sample timestamps must be strictly increasing")


def integrate_odometry(samples, initial: RigidPose) -> Trajectory:
    """Planar unicycle dead reckoning from speed / yaw-rate samples.

    Each sample describes the motion over the interval ending at its
    timestamp; the very first interval borrows the duration of the second
    (constant-rate capture), since nothing precedes the first timestamp.
    The heading update is the exact circular arc when the yaw rate is
    nonzero, so constant controls trace a perfect circle with no Euler
    drift; z stays at the initial height.
    """
    samples = list(samples)
    if not samples:
        raise InvalidInputError("odometry sequence is empty")
    timestamps = np.array([s.timestamp for s in samples])
    _check_monotonic(timestamps)

    deltas = np.empty(len(samples))
    deltas[1:] = np.diff(timestamps)
    deltas[0] = deltas[1] if len(samples) > 1 else 0.0

    x, y, z = initial.translation
    heading = initial.heading
    poses = []
    for sample, dt in zip(samples, deltas):
        v, omega = sample.speed, sample.yaw_rate
        if omega == 0.0:
            x += v * math.cos(heading) * dt
            y += v * math.sin(heading) * dt
        else:
            new_heading = heading + omega * dt
            radius = v / omega
            x += radius * (math.sin(new_heading) - math.sin(heading))
            y -= radius * (math.cos(new_heading) - math.cos(heading))
            heading = new_heading
        poses.append(RigidPose.from_heading(heading, (x, y, z)))
    return Trajectory(timestamps, tuple(poses), "odometry")


def gps_to_trajectory(samples, reference: GpsSample) -> Trajectory:
    """Local planar trajectory from GPS fixes.

    Positions come from an equirectangular projection about ``reference``
    (east = R * dlon * cos(lat_ref), north = R * dlat); altitude is zero.
    The heading at each frame is the finite difference from the previous
    fix, held when consecutive fixes coincide (default 0), and the first
    frame copies the second.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise InvalidInputError(f"gps trajectory needs at least 2 samples, got {len(samples)}")
    timestamps = np.array([s.timestamp for s in samples])
    _check_monotonic(timestamps)

    lat_ref = math.radians(reference.latitude)
    cos_ref = math.cos(lat_ref)
    xs = np.array([
        EARTH_RADIUS_M * math.radians(s.longitude - reference.longitude) * cos_ref for s in samples
    ])
    ys = np.array([
        EARTH_RADIUS_M * math.radians(s.latitude - reference.latitude) for s in samples
    ])

    headings = np.zeros(len(samples))
    for i in range(1, len(samples)):
        dx, dy = xs[i] - xs[i - 1], ys[i] - ys[i - 1]
        headings[i] = math.atan2(dy, dx) if (dx != 0.0 or dy != 0.0) else headings[i - 1]
    headings[0] = headings[1]

    poses = tuple(
        RigidPose.from_heading(h, (x, y, 0.0)) for h, x, y in zip(headings, xs, ys)
    )
    return Trajectory(timestamps, poses, "gps")


def disparity_to_point(
    u: float,
    v: float,
    d: float,
    intrinsics: CameraIntrinsics,
    d_min: float = DEFAULT_MIN_DISPARITY_PX,
) -> np.ndarray:
    """Backproject a pixel + disparity to a camera-frame point (m)."""
    if d <= d_min:
        raise InvalidDisparityError(f"disparity {d} px <= minimum {d_min} px (too distant or invalid)")
    z = intrinsics.fx * intrinsics.baseline / d
    x = (u - intrinsics.cx) * z / intrinsics.fx
    y = (v - intrinsics.cy) * z / intrinsics.fy
    return np.array([x, y, z])


def project_point(point_cam: np.ndarray, intrinsics: CameraIntrinsics) -> tuple[float, float, float]:
    """Pinhole projection of a camera-frame point to (u, v, disparity)."""
    x, y, z = np.asarray(point_cam, dtype=np.float64)
    if z <= 0:
        raise DegenerateInputError(f"cannot project point with depth {z} <= 0")
    u = intrinsics.cx + intrinsics.fx * x / z
    v = intrinsics.cy + intrinsics.fy * y / z
    return float(u), float(v), float(intrinsics.fx * intrinsics.baseline / z)


def sample_joint_disparity(
    dmap: DisparityMap,
    u: float,
    v: float,
    window: int = DEFAULT_JOINT_WINDOW_PX,
) -> float:
    """Median of the valid disparities in a window centered at (u, v).

    A raw per-pixel lookup is fragile at joints: one bad pixel hands the
    joint the depth of whatever is behind the person.  The median over a
    small window ignores a minority of such pixels.
    """
    if window < 1 or window % 2 == 0:
        raise InvalidInputError(f"window must be odd and positive, got {window}")
    cu, cv = int(round(u)), int(round(v))
    if not (0 <= cu < dmap.width and 0 <= cv < dmap.height):
        raise InvalidInputError(f"joint pixel ({u}, {v}) outside {dmap.width}x{dmap.height} image")
    half = window // 2
    rows = slice(max(0, cv - half), min(dmap.height, cv + half + 1))
    cols = slice(max(0, cu - half), min(dmap.width, cu + half + 1))
    values = dmap.values[rows, cols][dmap.valid[rows, cols]]
    if values.size == 0:
        raise DegenerateInputError(f"no valid disparity in {window}x{window} window at ({u}, {v})")
    return float(np.median(values))


def triangulate_skeleton(
    skeleton_2d: Skeleton2D,
    dmap: DisparityMap,
    intrinsics: CameraIntrinsics,
    pose: RigidPose,
    window: int = DEFAULT_JOINT_WINDOW_PX,
    d_min: float = DEFAULT_MIN_DISPARITY_PX,
) -> Skeleton3D:
    """Backproject 2-D joints through the disparity map into world space.

    Joints are independent: a joint without a usable disparity is marked
    invalid, never fabricated.  Raises only when no joint survives.
    """
    joints = np.zeros((len(skeleton_2d.valid), 3))
    valid = np.zeros(len(skeleton_2d.valid), dtype=bool)
    for j in range(len(valid)):
        if not skeleton_2d.valid[j]:
            continue
        u, v = skeleton_2d.positions[j]
        try:
            d = sample_joint_disparity(dmap, u, v, window)
            point_cam = disparity_to_point(u, v, d, intrinsics, d_min)
        except (DegenerateInputError, InvalidInputError):
            continue
        joints[j] = pose.apply(point_cam)
        valid[j] = True
    if not valid.any():
        raise DegenerateInputError("all joints invalid: no usable disparity at any joint")
    return Skeleton3D(joints, valid)
