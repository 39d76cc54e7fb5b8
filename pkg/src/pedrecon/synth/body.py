"""Pedestrian body model for the renderer: gait poses wrapped in capsules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ..skeleton.library import (
    HEAD_SPHERE_RADIUS_M,
    LIMB_RADII_M,
    gait_pose,
    standing_extent_m,
)
from ..skeleton.pose import Skeleton3D
from ..skeleton.topology import HEAD, LIMBS


@dataclass(frozen=True)
class PedestrianConfig:
    """A straight-line walker: start point, heading, speed, body shape."""

    start_xy: tuple[float, float]
    heading: float = 0.0
    speed: float = 1.2                # m/s; 0 stands still
    height: float = 1.75              # m, full standing extent
    gait_amplitude: float = 0.5       # leg swing, rad
    phase: float = 0.0                # gait phase at t = 0
    stride_m: float | None = None     # distance per gait cycle; default from height

    def __post_init__(self):
        if not (1.0 <= self.height <= 2.2):
            raise InvalidInputError(f"pedestrian height {self.height} outside [1.0, 2.2] m")
        if self.speed < 0:
            raise InvalidInputError("pedestrian speed must be non-negative")


def _rot_z(angle: float) -> np.ndarray:
    s, c = math.sin(angle), math.cos(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def pedestrian_skeleton(config: PedestrianConfig, time: float) -> Skeleton3D:
    """World-frame skeleton of the walker at the given time, feet on z = 0."""
    scale = config.height / standing_extent_m()
    stride = config.stride_m if config.stride_m is not None else 0.75 * config.height
    phase = config.phase + 2.0 * math.pi * config.speed * time / stride
    local = gait_pose(phase, config.gait_amplitude) * scale
    rotated = local @ _rot_z(config.heading).T
    x = config.start_xy[0] + config.speed * time * math.cos(config.heading)
    y = config.start_xy[1] + config.speed * time * math.sin(config.heading)
    # Lift the pelvis so the lowest capsule surface touches the ground.
    z = -(rotated[:, 2].min() - LIMB_RADII_M[4] * scale)
    return Skeleton3D(rotated + np.array([x, y, z]))


def body_capsules(skeleton: Skeleton3D, height: float) -> list[tuple[np.ndarray, np.ndarray, float]]:
    """(a, b, radius) capsules covering the body; the head is a zero-length one."""
    scale = height / standing_extent_m()
    capsules = [
        (skeleton.joints[parent], skeleton.joints[child], float(LIMB_RADII_M[i] * scale))
        for i, (parent, child) in enumerate(LIMBS)
    ]
    capsules.append((skeleton.joints[HEAD], skeleton.joints[HEAD], HEAD_SPHERE_RADIUS_M * scale))
    return capsules
