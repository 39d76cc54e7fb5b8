"""Reference library of plausible poses and the parametric gait generator.

The library ships as a procedurally generated set of walk-cycle and standing
poses rather than a motion-capture export, so it can be regenerated
deterministically and swapped out via the text file format.  Limb lengths of
every generated pose satisfy the standard ratio table exactly, which makes
the library usable as ground truth for round-trip tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DegenerateInputError, InvalidInputError
from .pose import Skeleton3D
from .topology import (
    HEAD,
    JOINT_COUNT,
    L_HIP,
    LIMB_COUNT,
    LIMBS,
    NECK,
    PELVIS,
    R_HIP,
    SPINE,
    THORAX,
)

#: Backbone (pelvis-thorax) length of the standard skeleton, meters.
STANDARD_BACKBONE_M = 0.46

#: Limb lengths of the standard skeleton in meters, one per entry of LIMBS.
STANDARD_LIMB_LENGTHS_M = np.array([
    0.13,  # pelvis -> l_hip
    0.13,  # pelvis -> r_hip
    0.45,  # l_hip -> l_knee
    0.45,  # r_hip -> r_knee
    0.44,  # l_knee -> l_ankle
    0.44,  # r_knee -> r_ankle
    0.23,  # pelvis -> spine
    0.23,  # spine -> thorax
    0.12,  # thorax -> neck
    0.16,  # neck -> head
    0.19,  # thorax -> l_shoulder
    0.19,  # thorax -> r_shoulder
    0.28,  # l_shoulder -> l_elbow
    0.28,  # r_shoulder -> r_elbow
    0.25,  # l_elbow -> l_wrist
    0.25,  # r_elbow -> r_wrist
])

#: Limb length divided by backbone length, one per limb.
LIMB_RATIOS = STANDARD_LIMB_LENGTHS_M / STANDARD_BACKBONE_M

_LIMB_BY_CHILD = {child: (index, parent) for index, (parent, child) in enumerate(LIMBS)}


def _place(joints: np.ndarray, child: int, direction, lengths: np.ndarray) -> None:
    index, parent = _LIMB_BY_CHILD[child]
    d = np.asarray(direction, dtype=np.float64)
    joints[child] = joints[parent] + lengths[index] * (d / np.linalg.norm(d))


def gait_pose(
    phase: float,
    leg_amplitude: float = 0.5,
    arm_amplitude: float | None = None,
    lean: float = 0.05,
    backbone_m: float = STANDARD_BACKBONE_M,
) -> np.ndarray:
    """One frame of a walk cycle, root-centered, facing +x with z up.

    Legs swing sinusoidally in the sagittal plane with a knee flexion that
    peaks during the swing phase; arms counter-swing with a fixed elbow bend
    and a slight outward offset.  Every limb has exactly its table length.
    """
    if arm_amplitude is None:
        arm_amplitude = 0.75 * leg_amplitude
    lengths = LIMB_RATIOS * backbone_m
    j = np.zeros((JOINT_COUNT, 3))

    _place(j, L_HIP, (0.0, 1.0, -0.35), lengths)
    _place(j, R_HIP, (0.0, -1.0, -0.35), lengths)

    for hip, knee, ankle, sign in ((L_HIP, 3, 5, 1.0), (R_HIP, 4, 6, -1.0)):
        swing = leg_amplitude * math.sin(phase) * sign
        bend = 0.35 * leg_amplitude * (1.0 + math.cos(phase) * sign)
        _place(j, knee, (math.sin(swing), 0.0, -math.cos(swing)), lengths)
        shank = swing - bend
        _place(j, ankle, (math.sin(shank), 0.0, -math.cos(shank)), lengths)

    up = (lean, 0.0, 1.0)
    _place(j, SPINE, up, lengths)
    _place(j, THORAX, up, lengths)
    head_up = (0.5 * lean, 0.0, 1.0)
    _place(j, NECK, head_up, lengths)
    _place(j, HEAD, head_up, lengths)

    _place(j, 11, (0.0, 1.0, -0.15), lengths)   # l_shoulder
    _place(j, 12, (0.0, -1.0, -0.15), lengths)  # r_shoulder

    for shoulder, elbow, wrist, sign in ((11, 13, 15, 1.0), (12, 14, 16, -1.0)):
        swing = -arm_amplitude * math.sin(phase) * sign
        _place(j, elbow, (math.sin(swing), sign * 0.18, -math.cos(swing)), lengths)
        flex = swing + 0.4 + 0.3 * max(0.0, -math.sin(phase) * sign)
        _place(j, wrist, (math.sin(flex), sign * 0.18, -math.cos(flex)), lengths)
    return j


def stand_pose(arm_angle: float = 0.1, backbone_m: float = STANDARD_BACKBONE_M) -> np.ndarray:
    """Upright standing pose with arms hanging at the given outward angle."""
    lengths = LIMB_RATIOS * backbone_m
    j = np.zeros((JOINT_COUNT, 3))
    _place(j, L_HIP, (0.0, 1.0, -0.35), lengths)
    _place(j, R_HIP, (0.0, -1.0, -0.35), lengths)
    for knee, ankle in ((3, 5), (4, 6)):
        _place(j, knee, (0.0, 0.0, -1.0), lengths)
        _place(j, ankle, (0.0, 0.0, -1.0), lengths)
    up = (0.02, 0.0, 1.0)
    _place(j, SPINE, up, lengths)
    _place(j, THORAX, up, lengths)
    _place(j, NECK, up, lengths)
    _place(j, HEAD, up, lengths)
    _place(j, 11, (0.0, 1.0, -0.15), lengths)
    _place(j, 12, (0.0, -1.0, -0.15), lengths)
    for elbow, wrist, sign in ((13, 15, 1.0), (14, 16, -1.0)):
        _place(j, elbow, (0.05, sign * arm_angle, -1.0), lengths)
        _place(j, wrist, (0.1, sign * arm_angle, -1.0), lengths)
    return j


@dataclass
class ReferenceLibrary:
    """Root-centered plausible poses plus the standard limb-ratio table."""

    poses: np.ndarray        # (N, 17, 3), every entry fully valid
    limb_ratios: np.ndarray  # (16,) limb length / backbone length

    def __post_init__(self):
        self.poses = np.asarray(self.poses, dtype=np.float64)
        self.limb_ratios = np.asarray(self.limb_ratios, dtype=np.float64)
        if self.poses.ndim != 3 or self.poses.shape[1:] != (JOINT_COUNT, 3):
            raise InvalidInputError(f"poses must have shape (N, {JOINT_COUNT}, 3)")
        if len(self.poses) < 1:
            raise DegenerateInputError("reference library must contain at least one pose")
        if self.limb_ratios.shape != (LIMB_COUNT,):
            raise InvalidInputError(f"ratio table must have {LIMB_COUNT} entries")
        if np.any(self.limb_ratios <= 0):
            raise InvalidInputError("all limb ratios must be positive")
        if not np.all(np.isfinite(self.poses)):
            raise InvalidInputError("library poses must be finite")
        if np.any(np.abs(self.poses[:, PELVIS]) > 1e-9):
            raise InvalidInputError("library poses must be root-centered at the pelvis")
        self.poses.flags.writeable = False
        self.limb_ratios.flags.writeable = False

    def __len__(self) -> int:
        return len(self.poses)

    def skeleton(self, index: int) -> Skeleton3D:
        return Skeleton3D(self.poses[index].copy())

    @property
    def backbone_lengths(self) -> np.ndarray:
        """Pelvis-thorax distance per entry."""
        return np.linalg.norm(self.poses[:, THORAX] - self.poses[:, PELVIS], axis=1)


def build_reference_library(
    walk_amplitudes: tuple[float, ...] = (0.25, 0.45, 0.65),
    phases_per_cycle: int = 60,
    stand_count: int = 20,
    backbone_m: float = STANDARD_BACKBONE_M,
) -> ReferenceLibrary:
    """Deterministic ~200-pose library from a walk/stand parameter grid.

    Torso lean grows with the leg amplitude, which keeps entries from
    different amplitude groups distinct even at the phases where the legs
    pass through neutral; a library without duplicates makes nearest-
    neighbor lookups unambiguous.
    """
    poses = []
    for amplitude in walk_amplitudes:
        for k in range(phases_per_cycle):
            poses.append(gait_pose(
                2.0 * math.pi * k / phases_per_cycle, amplitude,
                lean=0.03 + 0.05 * amplitude, backbone_m=backbone_m,
            ))
    for k in range(stand_count):
        poses.append(stand_pose(arm_angle=0.02 + 0.015 * k, backbone_m=backbone_m))
    return ReferenceLibrary(np.array(poses), LIMB_RATIOS.copy())


@lru_cache(maxsize=1)
def default_library() -> ReferenceLibrary:
    return build_reference_library()


#: Capsule radius per limb for the scale-1 standard body, meters.
LIMB_RADII_M = np.array([
    0.07, 0.07,          # hips
    0.06, 0.06,          # thighs
    0.055, 0.055,        # shanks
    0.11, 0.11,          # torso
    0.05,                # neck
    0.08,                # neck -> head
    0.06, 0.06,          # shoulders
    0.045, 0.045,        # upper arms
    0.04, 0.04,          # forearms
])

#: Radius of the extra sphere rendered at the head joint, meters.
HEAD_SPHERE_RADIUS_M = 0.10


@lru_cache(maxsize=1)
def standing_extent_m() -> float:
    """Full standing height of the scale-1 standard body, capsule radii included."""
    j = stand_pose()
    top = j[HEAD, 2] + HEAD_SPHERE_RADIUS_M
    bottom = j[:, 2].min() - LIMB_RADII_M[4]  # shank capsule reaches below the ankle
    return float(top - bottom)


@lru_cache(maxsize=1)
def height_per_backbone() -> float:
    """Standing height divided by backbone length for the standard body."""
    return standing_extent_m() / STANDARD_BACKBONE_M
