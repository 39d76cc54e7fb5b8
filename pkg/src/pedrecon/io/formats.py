"""File formats: load/save pairs for every artifact the pipeline touches.

All record files are line-delimited whitespace-separated text ('#' starts a
comment) so artifacts diff cleanly; floats are written with 17 significant
digits, which round-trips float64 exactly.  Rasters are PNG: disparity as
16-bit (raw 0 = invalid, raw n = (n-1)/256 px, the common stereo-benchmark
convention, so real dataset frames load unmodified) and segmentation as
8-bit class ids.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image

from ..disparity import DisparityMap
from ..errors import (
    DimensionMismatchError,
    FormatError,
    InvalidInputError,
    MissingFileError,
)
from ..geometry import CameraIntrinsics, GpsSample, OdometrySample, RigidPose, Trajectory
from ..metrics import BBox
from ..pointcloud import LabeledPointCloud, VoxelGrid
from ..semantics import CLASS_COUNT
from ..skeleton.library import ReferenceLibrary
from ..skeleton.pose import Skeleton2D, Skeleton3D
from ..skeleton.topology import JOINT_COUNT, JOINT_NAMES


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _require(path) -> Path:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"{path}: no such file or directory")
    return path


def _write_text(path, lines: Iterable[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _data_lines(path: Path) -> list[tuple[int, list[str]]]:
    """(line number, fields) for every non-comment, non-blank line."""
    out = []
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            out.append((number, stripped.split()))
    return out


def _parse_float(path: Path, number: int, token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise FormatError(f"{path}:{number}: expected a number, got {token!r}") from None


def _parse_int(path: Path, number: int, token: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise FormatError(f"{path}:{number}: expected an integer, got {token!r}") from None


# ---------------------------------------------------------------------------
# calibration

_CALIBRATION_KEYS = ("fx", "fy", "cx", "cy", "baseline", "width", "height")


def save_calibration(camera: CameraIntrinsics, path) -> Path:
    return _write_text(path, [f"{key} = {_fmt(getattr(camera, key))}" for key in _CALIBRATION_KEYS])


def load_calibration(path) -> CameraIntrinsics:
    path = _require(path)
    values: dict[str, float] = {}
    for number, fields in _data_lines(path):
        if len(fields) != 3 or fields[1] != "=":
            raise FormatError(f"{path}:{number}: expected 'key = value'")
        key = fields[0]
        if key not in _CALIBRATION_KEYS:
            raise FormatError(f"{path}:{number}: unknown calibration key {key!r}")
        values[key] = _parse_float(path, number, fields[2])
    missing = [key for key in _CALIBRATION_KEYS if key not in values]
    if missing:
        raise FormatError(f"{path}: missing calibration keys: {', '.join(missing)}")
    return CameraIntrinsics(
        values["fx"], values["fy"], values["cx"], values["cy"],
        values["baseline"], int(values["width"]), int(values["height"]),
    )


# ---------------------------------------------------------------------------
# rasters

def save_disparity(dmap: DisparityMap, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(dmap.to_raw()).save(path, format="PNG")
    return path


def _load_raster(path) -> np.ndarray:
    path = _require(path)
    try:
        with Image.open(path) as image:
            width, height = image.size
            try:
                image.load()
            except OSError:
                actual = os.path.getsize(path)
                raise FormatError(
                    f"{path}: truncated raster: {width}x{height} needs "
                    f"{width * height * 2} bytes of pixel data, file holds {actual} bytes"
                ) from None
            return np.array(image)
    except FormatError:
        raise
    except Exception as exc:
        raise FormatError(f"{path}: not a readable raster ({exc})") from None


def _check_raster_size(path, arr: np.ndarray, expect_size) -> None:
    if expect_size is None:
        return
    width, height = expect_size
    if arr.shape != (height, width):
        raise DimensionMismatchError(
            f"{path}: raster is {arr.shape[1]}x{arr.shape[0]}, "
            f"calibration expects {width}x{height}"
        )


def load_disparity(path, expect_size: tuple[int, int] | None = None) -> DisparityMap:
    arr = _load_raster(path)
    if arr.ndim != 2:
        raise FormatError(f"{path}: disparity raster must be single-channel")
    if arr.dtype not in (np.uint16, np.int32, np.uint8):
        raise FormatError(f"{path}: unsupported raster dtype {arr.dtype}")
    if arr.min() < 0 or arr.max() > 65535:
        raise FormatError(f"{path}: raster values outside the 16-bit range")
    _check_raster_size(path, arr, expect_size)
    return DisparityMap.from_raw(arr.astype(np.uint16))


def save_segmentation(class_ids: np.ndarray, path) -> Path:
    class_ids = np.asarray(class_ids)
    if class_ids.dtype != np.uint8:
        class_ids = class_ids.astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(class_ids, mode="L").save(path, format="PNG")
    return path


def load_segmentation(path, expect_size: tuple[int, int] | None = None) -> np.ndarray:
    arr = _load_raster(path)
    if arr.ndim != 2:
        raise FormatError(f"{path}: segmentation raster must be single-channel")
    if arr.max(initial=0) >= CLASS_COUNT:
        raise FormatError(
            f"{path}: unknown class id {int(arr.max())} (classes are 0..{CLASS_COUNT - 1})"
        )
    _check_raster_size(path, arr, expect_size)
    return arr.astype(np.uint8)


def frame_raster_path(directory, index: int) -> Path:
    return Path(directory) / f"frame_{index:04d}.png"


def list_frame_rasters(directory) -> list[Path]:
    directory = _require(directory)
    return sorted(directory.glob("frame_*.png"))


# ---------------------------------------------------------------------------
# detections and joints

@dataclass(frozen=True)
class DetectionRecord:
    frame_id: int
    label: str
    score: float
    x: float
    y: float
    w: float
    h: float

    def to_bbox(self) -> BBox:
        return BBox(self.x, self.y, self.w, self.h, self.label, self.score)


@dataclass(frozen=True)
class JointRecord:
    frame_id: int
    person_id: int
    joint_id: int
    u: float
    v: float
    confidence: float

    def __post_init__(self):
        if not (0 <= self.joint_id < JOINT_COUNT):
            raise InvalidInputError(f"joint id {self.joint_id} outside [0, {JOINT_COUNT - 1}]")


def save_detections(records: Iterable[DetectionRecord], path) -> Path:
    lines = ["# frame label score x y w h"]
    for r in records:
        lines.append(
            f"{r.frame_id} {r.label} {_fmt(r.score)} {_fmt(r.x)} {_fmt(r.y)} {_fmt(r.w)} {_fmt(r.h)}"
        )
    return _write_text(path, lines)


def load_detections(path) -> list[DetectionRecord]:
    path = _require(path)
    records = []
    for number, fields in _data_lines(path):
        if len(fields) != 7:
            raise FormatError(f"{path}:{number}: expected 7 fields, got {len(fields)}")
        records.append(DetectionRecord(
            _parse_int(path, number, fields[0]),
            fields[1],
            _parse_float(path, number, fields[2]),
            *(_parse_float(path, number, f) for f in fields[3:]),
        ))
    return records


def group_detections(records: Iterable[DetectionRecord]) -> dict[int, list[BBox]]:
    grouped: dict[int, list[BBox]] = {}
    for record in records:
        grouped.setdefault(record.frame_id, []).append(record.to_bbox())
    return grouped


def save_joints(records: Iterable[JointRecord], path) -> Path:
    lines = ["# frame person joint u v confidence"]
    for r in records:
        lines.append(
            f"{r.frame_id} {r.person_id} {r.joint_id} {_fmt(r.u)} {_fmt(r.v)} {_fmt(r.confidence)}"
        )
    return _write_text(path, lines)


def load_joints(path) -> list[JointRecord]:
    path = _require(path)
    records = []
    for number, fields in _data_lines(path):
        if len(fields) != 6:
            raise FormatError(f"{path}:{number}: expected 6 fields, got {len(fields)}")
        try:
            records.append(JointRecord(
                _parse_int(path, number, fields[0]),
                _parse_int(path, number, fields[1]),
                _parse_int(path, number, fields[2]),
                _parse_float(path, number, fields[3]),
                _parse_float(path, number, fields[4]),
                _parse_float(path, number, fields[5]),
            ))
        except InvalidInputError as exc:
            raise FormatError(f"{path}:{number}: {exc}") from None
    return records


def group_joints(records: Iterable[JointRecord]) -> dict[int, dict[int, Skeleton2D]]:
    """Records -> frame -> person -> Skeleton2D (absent joints invalid)."""
    staged: dict[int, dict[int, list[JointRecord]]] = {}
    for record in records:
        staged.setdefault(record.frame_id, {}).setdefault(record.person_id, []).append(record)
    grouped: dict[int, dict[int, Skeleton2D]] = {}
    for frame_id, people in staged.items():
        grouped[frame_id] = {}
        for person_id, person_records in people.items():
            positions = np.zeros((JOINT_COUNT, 2))
            confidence = np.zeros(JOINT_COUNT)
            valid = np.zeros(JOINT_COUNT, dtype=bool)
            for r in person_records:
                positions[r.joint_id] = (r.u, r.v)
                confidence[r.joint_id] = r.confidence
                valid[r.joint_id] = True
            grouped[frame_id][person_id] = Skeleton2D(positions, confidence, valid)
    return grouped


# ---------------------------------------------------------------------------
# odometry / gps / trajectory

def save_odometry(samples: Iterable[OdometrySample], path) -> Path:
    lines = ["# timestamp speed yaw_rate"]
    lines += [f"{_fmt(s.timestamp)} {_fmt(s.speed)} {_fmt(s.yaw_rate)}" for s in samples]
    return _write_text(path, lines)


def load_odometry(path) -> list[OdometrySample]:
    path = _require(path)
    samples = []
    for number, fields in _data_lines(path):
        if len(fields) != 3:
            raise FormatError(f"{path}:{number}: expected 3 fields, got {len(fields)}")
        samples.append(OdometrySample(*(_parse_float(path, number, f) for f in fields)))
    return samples


def save_gps(samples: Iterable[GpsSample], path) -> Path:
    lines = ["# timestamp latitude longitude"]
    lines += [f"{_fmt(s.timestamp)} {_fmt(s.latitude)} {_fmt(s.longitude)}" for s in samples]
    return _write_text(path, lines)


def load_gps(path) -> list[GpsSample]:
    path = _require(path)
    samples = []
    for number, fields in _data_lines(path):
        if len(fields) != 3:
            raise FormatError(f"{path}:{number}: expected 3 fields, got {len(fields)}")
        samples.append(GpsSample(*(_parse_float(path, number, f) for f in fields)))
    return samples


def save_trajectory(trajectory: Trajectory, path) -> Path:
    lines = [
        "# camera trajectory: t x y z r00 r01 r02 r10 r11 r12 r20 r21 r22",
        f"source {trajectory.source}",
    ]
    for timestamp, pose in trajectory:
        fields = [_fmt(timestamp), *(_fmt(c) for c in pose.translation)]
        fields += [_fmt(c) for c in pose.rotation.ravel()]
        lines.append(" ".join(fields))
    return _write_text(path, lines)


def load_trajectory(path) -> Trajectory:
    path = _require(path)
    source = None
    timestamps = []
    poses = []
    for number, fields in _data_lines(path):
        if fields[0] == "source":
            if len(fields) != 2:
                raise FormatError(f"{path}:{number}: expected 'source <odometry|gps>'")
            source = fields[1]
            continue
        if len(fields) != 13:
            raise FormatError(f"{path}:{number}: expected 13 fields, got {len(fields)}")
        values = [_parse_float(path, number, f) for f in fields]
        timestamps.append(values[0])
        poses.append(RigidPose(np.array(values[4:]).reshape(3, 3), np.array(values[1:4])))
    if source is None:
        raise FormatError(f"{path}: missing 'source' header line")
    if not poses:
        raise FormatError(f"{path}: trajectory contains no poses")
    return Trajectory(np.array(timestamps), tuple(poses), source)


# ---------------------------------------------------------------------------
# pointcloud / voxel grid

def save_pointcloud(cloud: LabeledPointCloud, path) -> Path:
    lines = ["# x y z class"]
    for position, class_id in zip(cloud.positions, cloud.class_ids):
        lines.append(" ".join([*(_fmt(c) for c in position), str(int(class_id))]))
    return _write_text(path, lines)


def load_pointcloud(path) -> LabeledPointCloud:
    path = _require(path)
    positions, class_ids = [], []
    for number, fields in _data_lines(path):
        if len(fields) != 4:
            raise FormatError(f"{path}:{number}: expected 4 fields, got {len(fields)}")
        positions.append([_parse_float(path, number, f) for f in fields[:3]])
        class_ids.append(_parse_int(path, number, fields[3]))
    if not positions:
        return LabeledPointCloud.empty()
    return LabeledPointCloud(
        np.array(positions), np.array(class_ids, dtype=np.uint8),
        np.zeros(len(positions), dtype=np.int32),
    )


def save_voxel_grid(grid: VoxelGrid, path) -> Path:
    lines = [
        "# voxel grid: ix iy iz count class",
        f"origin {' '.join(_fmt(c) for c in grid.origin)}",
        f"resolution {_fmt(grid.resolution)}",
        f"voxels {len(grid)}",
    ]
    for key in sorted(grid.cells):
        lines.append(
            f"{key[0]} {key[1]} {key[2]} {grid.count(key)} {int(grid.majority_class(key))}"
        )
    return _write_text(path, lines)


def load_voxel_grid(path) -> VoxelGrid:
    """Load a sparse grid; per-voxel histograms collapse to the stored majority."""
    path = _require(path)
    origin = None
    resolution = None
    declared = None
    cells: dict[tuple[int, int, int], np.ndarray] = {}
    for number, fields in _data_lines(path):
        if fields[0] == "origin":
            if len(fields) != 4:
                raise FormatError(f"{path}:{number}: expected 'origin x y z'")
            origin = np.array([_parse_float(path, number, f) for f in fields[1:]])
        elif fields[0] == "resolution":
            resolution = _parse_float(path, number, fields[1])
        elif fields[0] == "voxels":
            declared = _parse_int(path, number, fields[1])
        else:
            if origin is None or resolution is None:
                raise FormatError(f"{path}:{number}: voxel entry before header")
            if len(fields) != 5:
                raise FormatError(f"{path}:{number}: expected 5 fields, got {len(fields)}")
            ix, iy, iz, count, class_id = (_parse_int(path, number, f) for f in fields)
            if not (0 <= class_id < CLASS_COUNT):
                raise FormatError(f"{path}:{number}: unknown class id {class_id}")
            if count < 1:
                raise FormatError(f"{path}:{number}: voxel count must be >= 1")
            histogram = np.zeros(CLASS_COUNT, dtype=np.int64)
            histogram[class_id] = count
            cells[(ix, iy, iz)] = histogram
    if origin is None or resolution is None:
        raise FormatError(f"{path}: missing 'origin' or 'resolution' header")
    if declared is not None and declared != len(cells):
        raise FormatError(f"{path}: header declares {declared} voxels, file has {len(cells)}")
    return VoxelGrid(origin, resolution, cells)


# ---------------------------------------------------------------------------
# pose library and corrected poses

def save_library(library: ReferenceLibrary, path) -> Path:
    lines = [
        "# pose library",
        "joints " + " ".join(JOINT_NAMES),
        "ratios " + " ".join(_fmt(r) for r in library.limb_ratios),
        f"poses {len(library)}",
    ]
    for pose in library.poses:
        lines.append(" ".join(_fmt(c) for c in pose.ravel()))
    return _write_text(path, lines)


def load_library(path) -> ReferenceLibrary:
    path = _require(path)
    ratios = None
    poses = []
    for number, fields in _data_lines(path):
        if fields[0] == "joints":
            if tuple(fields[1:]) != JOINT_NAMES:
                raise FormatError(f"{path}:{number}: joint names do not match the fixed topology")
        elif fields[0] == "ratios":
            ratios = np.array([_parse_float(path, number, f) for f in fields[1:]])
        elif fields[0] == "poses":
            continue
        else:
            if len(fields) != JOINT_COUNT * 3:
                raise FormatError(
                    f"{path}:{number}: expected {JOINT_COUNT * 3} coordinates, got {len(fields)}"
                )
            values = [_parse_float(path, number, f) for f in fields]
            poses.append(np.array(values).reshape(JOINT_COUNT, 3))
    if ratios is None:
        raise FormatError(f"{path}: missing 'ratios' header line")
    if not poses:
        raise FormatError(f"{path}: library contains no poses")
    return ReferenceLibrary(np.array(poses), ratios)


@dataclass(frozen=True)
class PoseRecord:
    frame_id: int
    person_id: int
    joint_id: int
    x: float
    y: float
    z: float
    valid: bool


def skeleton_to_records(frame_id: int, person_id: int, skeleton: Skeleton3D) -> list[PoseRecord]:
    return [
        PoseRecord(
            frame_id, person_id, j,
            float(skeleton.joints[j, 0]), float(skeleton.joints[j, 1]),
            float(skeleton.joints[j, 2]), bool(skeleton.valid[j]),
        )
        for j in range(JOINT_COUNT)
    ]


def save_poses(records: Iterable[PoseRecord], path) -> Path:
    lines = ["# frame person joint x y z valid"]
    for r in records:
        lines.append(
            f"{r.frame_id} {r.person_id} {r.joint_id} "
            f"{_fmt(r.x)} {_fmt(r.y)} {_fmt(r.z)} {int(r.valid)}"
        )
    return _write_text(path, lines)


def load_poses(path) -> list[PoseRecord]:
    path = _require(path)
    records = []
    for number, fields in _data_lines(path):
        if len(fields) != 7:
            raise FormatError(f"{path}:{number}: expected 7 fields, got {len(fields)}")
        records.append(PoseRecord(
            _parse_int(path, number, fields[0]),
            _parse_int(path, number, fields[1]),
            _parse_int(path, number, fields[2]),
            _parse_float(path, number, fields[3]),
            _parse_float(path, number, fields[4]),
            _parse_float(path, number, fields[5]),
            bool(_parse_int(path, number, fields[6])),
        ))
    return records


def group_poses(records: Iterable[PoseRecord]) -> dict[int, dict[int, Skeleton3D]]:
    staged: dict[int, dict[int, list[PoseRecord]]] = {}
    for record in records:
        staged.setdefault(record.frame_id, {}).setdefault(record.person_id, []).append(record)
    grouped: dict[int, dict[int, Skeleton3D]] = {}
    for frame_id, people in staged.items():
        grouped[frame_id] = {}
        for person_id, person_records in people.items():
            joints = np.zeros((JOINT_COUNT, 3))
            valid = np.zeros(JOINT_COUNT, dtype=bool)
            for r in person_records:
                joints[r.joint_id] = (r.x, r.y, r.z)
                valid[r.joint_id] = r.valid
            grouped[frame_id][person_id] = Skeleton3D(joints, valid)
    return grouped
