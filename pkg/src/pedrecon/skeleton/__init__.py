"""Articulated skeleton types, reference library, and plausibility correction."""

from .correct import (
    Alignment,
    CorrectedPose,
    correct_pose,
    procrustes,
    threshold_limbs,
    truncated_nn,
)
from .library import (
    LIMB_RATIOS,
    STANDARD_BACKBONE_M,
    ReferenceLibrary,
    build_reference_library,
    default_library,
    gait_pose,
    stand_pose,
)
from .pose import Skeleton2D, Skeleton3D, limb_lengths
from .topology import JOINT_COUNT, JOINT_NAMES, LIMB_COUNT, LIMBS, TOPOLOGY, SkeletonTopology

__all__ = [
    "Alignment",
    "CorrectedPose",
    "JOINT_COUNT",
    "JOINT_NAMES",
    "LIMB_COUNT",
    "LIMBS",
    "LIMB_RATIOS",
    "ReferenceLibrary",
    "STANDARD_BACKBONE_M",
    "Skeleton2D",
    "Skeleton3D",
    "SkeletonTopology",
    "TOPOLOGY",
    "build_reference_library",
    "correct_pose",
    "default_library",
    "gait_pose",
    "limb_lengths",
    "procrustes",
    "stand_pose",
    "threshold_limbs",
    "truncated_nn",
]
