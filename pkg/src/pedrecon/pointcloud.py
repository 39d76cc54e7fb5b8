"""Labeled world-frame pointclouds, voxel maps, and fixed-size vehicle boxes.

Backprojection turns a disparity frame plus its segmentation into labeled
3-D points; frames aggregate by concatenation and fuse in a voxel grid via
per-cell majority vote.  Dynamic objects can be excluded at the
backprojection stage, at the voxelization stage, or both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .disparity import DisparityMap
from .errors import DimensionMismatchError, InvalidInputError
from .geometry import DEFAULT_MIN_DISPARITY_PX, CameraIntrinsics, RigidPose
from .metrics import BBox
from .semantics import CLASS_COUNT, SemanticClass, dynamic_lookup, validate_class_ids


class LabeledPoint(NamedTuple):
    position: np.ndarray
    semantic_class: SemanticClass
    frame_id: int


@dataclass
class LabeledPointCloud:
    """Struct-of-arrays pointcloud: positions, class ids, source frame ids."""

    positions: np.ndarray   # (N, 3) float64, world frame
    class_ids: np.ndarray   # (N,) uint8
    frame_ids: np.ndarray   # (N,) int32

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.class_ids = np.asarray(self.class_ids, dtype=np.uint8).reshape(-1)
        self.frame_ids = np.asarray(self.frame_ids, dtype=np.int32).reshape(-1)
        n = len(self.positions)
        if len(self.class_ids) != n or len(self.frame_ids) != n:
            raise InvalidInputError("positions, class_ids and frame_ids must have equal length")
        validate_class_ids(self.class_ids)

    def __len__(self) -> int:
        return len(self.positions)

    def point(self, index: int) -> LabeledPoint:
        return LabeledPoint(
            self.positions[index].copy(),
            SemanticClass(int(self.class_ids[index])),
            int(self.frame_ids[index]),
        )

    @classmethod
    def empty(cls) -> "LabeledPointCloud":
        return cls(np.empty((0, 3)), np.empty(0, dtype=np.uint8), np.empty(0, dtype=np.int32))


def backproject_frame(
    dmap: DisparityMap,
    segmentation: np.ndarray,
    intrinsics: CameraIntrinsics,
    pose: RigidPose,
    stride: int = 1,
    exclude_dynamic: bool = False,
    frame_id: int = 0,
    d_min: float = DEFAULT_MIN_DISPARITY_PX,
) -> LabeledPointCloud:
    """One labeled world point per valid-disparity pixel on the stride grid.

    ``exclude_dynamic`` drops pixels of moving-object classes at the source,
    mirroring what a reconstruction front end does before it ever sees them.
    """
    segmentation = np.asarray(segmentation)
    if segmentation.shape != dmap.values.shape:
        raise DimensionMismatchError(
            f"segmentation {segmentation.shape} != disparity {dmap.values.shape}"
        )
    if (dmap.height, dmap.width) != (intrinsics.height, intrinsics.width):
        raise DimensionMismatchError(
            f"raster {dmap.width}x{dmap.height} != calibration "
            f"{intrinsics.width}x{intrinsics.height}"
        )
    if stride < 1:
        raise InvalidInputError(f"stride must be >= 1, got {stride}")
    validate_class_ids(segmentation)

    vs, us = np.meshgrid(
        np.arange(0, dmap.height, stride), np.arange(0, dmap.width, stride), indexing="ij"
    )
    d = dmap.values[vs, us]
    keep = dmap.valid[vs, us] & (d > d_min)
    classes = segmentation[vs, us]
    if exclude_dynamic:
        keep &= ~dynamic_lookup()[classes]

    d = d[keep]
    u = us[keep].astype(np.float64)
    v = vs[keep].astype(np.float64)
    z = intrinsics.fx * intrinsics.baseline / d
    x = (u - intrinsics.cx) * z / intrinsics.fx
    y = (v - intrinsics.cy) * z / intrinsics.fy
    points_cam = np.stack([x, y, z], axis=1)
    return LabeledPointCloud(
        pose.apply(points_cam),
        classes[keep],
        np.full(int(keep.sum()), frame_id, dtype=np.int32),
    )


def aggregate_clouds(clouds: Iterable[LabeledPointCloud]) -> LabeledPointCloud:
    """Concatenate per-frame clouds, preserving frame ids."""
    clouds = list(clouds)
    if not clouds:
        return LabeledPointCloud.empty()
    return LabeledPointCloud(
        np.concatenate([c.positions for c in clouds]),
        np.concatenate([c.class_ids for c in clouds]),
        np.concatenate([c.frame_ids for c in clouds]),
    )


@dataclass
class VoxelGrid:
    """Sparse voxel map: index -> per-class histogram of contained points."""

    origin: np.ndarray
    resolution: float
    cells: dict[tuple[int, int, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        if self.resolution <= 0:
            raise InvalidInputError(f"resolution must be positive, got {self.resolution}")

    def __len__(self) -> int:
        return len(self.cells)

    def count(self, index: tuple[int, int, int]) -> int:
        return int(self.cells[index].sum())

    def majority_class(self, index: tuple[int, int, int]) -> SemanticClass:
        # argmax returns the first maximum: ties break to the lowest class id.
        return SemanticClass(int(np.argmax(self.cells[index])))

    @property
    def total_points(self) -> int:
        return sum(int(h.sum()) for h in self.cells.values())

    def merge(self, other: "VoxelGrid") -> "VoxelGrid":
        """Associative, commutative fusion of grids with identical layout."""
        if not np.array_equal(self.origin, other.origin) or self.resolution != other.resolution:
            raise InvalidInputError("cannot merge voxel grids with different origin or resolution")
        cells = {k: h.copy() for k, h in self.cells.items()}
        for key, hist in other.cells.items():
            if key in cells:
                cells[key] = cells[key] + hist
            else:
                cells[key] = hist.copy()
        return VoxelGrid(self.origin.copy(), self.resolution, cells)


def voxelize(
    cloud: LabeledPointCloud,
    resolution: float,
    drop_dynamic: bool = False,
    origin: np.ndarray | None = None,
) -> VoxelGrid:
    """Bin points into a voxel grid with a per-cell class histogram.

    With ``drop_dynamic`` every moving-object point is removed before any
    binning, so dynamic classes contribute to no histogram.  The default
    origin is the cloud's minimum corner floored onto the resolution lattice,
    making auto-origin grids reproducible from the data alone.
    """
    if resolution <= 0:
        raise InvalidInputError(f"resolution must be positive, got {resolution}")
    positions = cloud.positions
    class_ids = cloud.class_ids
    if drop_dynamic:
        keep = ~dynamic_lookup()[class_ids]
        positions = positions[keep]
        class_ids = class_ids[keep]

    if origin is None:
        if len(positions) == 0:
            origin = np.zeros(3)
        else:
            origin = np.floor(positions.min(axis=0) / resolution) * resolution
    origin = np.asarray(origin, dtype=np.float64).reshape(3)

    grid = VoxelGrid(origin, resolution)
    if len(positions) == 0:
        return grid

    indices = np.floor((positions - origin) / resolution).astype(np.int64)
    unique, inverse = np.unique(indices, axis=0, return_inverse=True)
    hist = np.zeros((len(unique), CLASS_COUNT), dtype=np.int64)
    np.add.at(hist, (inverse, class_ids.astype(np.int64)), 1)
    grid.cells = {tuple(int(c) for c in key): hist[i] for i, key in enumerate(unique)}
    return grid


@dataclass(frozen=True)
class Box3D:
    """Oriented 3-D box: center (m), (length, width, height) (m), yaw (rad)."""

    center: np.ndarray
    dimensions: tuple[float, float, float]
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(3))
        if any(d <= 0 for d in self.dimensions):
            raise InvalidInputError(f"box dimensions must be positive, got {self.dimensions}")


#: Typical sedan (length, width, height) used when no size estimate exists.
DEFAULT_CAR_DIMENSIONS_M = (4.5, 1.8, 1.5)


def car_boxes_3d(
    car_bboxes: list[BBox],
    dmap: DisparityMap,
    segmentation: np.ndarray,
    intrinsics: CameraIntrinsics,
    pose: RigidPose,
    dimensions: tuple[float, float, float] = DEFAULT_CAR_DIMENSIONS_M,
    d_min: float = DEFAULT_MIN_DISPARITY_PX,
) -> tuple[list[Box3D], list[tuple[int, str]]]:
    """Fixed-size 3-D boxes for 2-D car detections.

    Each detection contributes one box placed at its center pixel,
    backprojected at the mean disparity of the car-labeled pixels it covers.
    That mean is exactly what makes a detection spanning several parked cars
    collapse into a single box at an intermediate depth.  Boxes with no
    usable car pixel are skipped and reported as (index, reason).
    """
    segmentation = np.asarray(segmentation)
    if segmentation.shape != dmap.values.shape:
        raise DimensionMismatchError(
            f"segmentation {segmentation.shape} != disparity {dmap.values.shape}"
        )
    boxes: list[Box3D] = []
    skipped: list[tuple[int, str]] = []
    car_pixels = (segmentation == SemanticClass.CAR) & dmap.valid & (dmap.values > d_min)
    for index, bbox in enumerate(car_bboxes):
        x0 = max(0, int(math.floor(bbox.x)))
        y0 = max(0, int(math.floor(bbox.y)))
        x1 = min(dmap.width, int(math.ceil(bbox.x + bbox.w)))
        y1 = min(dmap.height, int(math.ceil(bbox.y + bbox.h)))
        if x1 <= x0 or y1 <= y0:
            skipped.append((index, "outside image"))
            continue
        region = car_pixels[y0:y1, x0:x1]
        if not region.any():
            skipped.append((index, "no car-labeled valid disparity"))
            continue
        mean_d = float(dmap.values[y0:y1, x0:x1][region].mean())
        z = intrinsics.fx * intrinsics.baseline / mean_d
        u = bbox.x + bbox.w / 2.0
        v = bbox.y + bbox.h / 2.0
        center_cam = np.array([
            (u - intrinsics.cx) * z / intrinsics.fx,
            (v - intrinsics.cy) * z / intrinsics.fy,
            z,
        ])
        boxes.append(Box3D(pose.apply(center_cam), tuple(dimensions), pose.heading))
    return boxes, skipped
