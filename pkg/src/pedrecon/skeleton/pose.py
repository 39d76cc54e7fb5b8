"""2-D and 3-D articulated pose containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError, InvalidInputError
from .topology import JOINT_COUNT, L_HIP, LIMBS, PELVIS, R_HIP, THORAX


def _as_joint_array(values, columns: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (JOINT_COUNT, columns):
        raise InvalidInputError(f"{name} must have shape ({JOINT_COUNT}, {columns}), got {arr.shape}")
    return arr


def _as_valid_array(valid) -> np.ndarray:
    if valid is None:
        return np.ones(JOINT_COUNT, dtype=bool)
    arr = np.asarray(valid, dtype=bool)
    if arr.shape != (JOINT_COUNT,):
        raise InvalidInputError(f"valid flags must have shape ({JOINT_COUNT},), got {arr.shape}")
    return arr


@dataclass
class Skeleton2D:
    """Per-joint image positions (px) with confidences and validity flags."""

    positions: np.ndarray                    # (17, 2) u, v
    confidence: np.ndarray = None            # (17,)
    valid: np.ndarray = None                 # (17,)

    def __post_init__(self):
        self.positions = _as_joint_array(self.positions, 2, "positions")
        if self.confidence is None:
            self.confidence = np.ones(JOINT_COUNT)
        self.confidence = np.asarray(self.confidence, dtype=np.float64)
        if self.confidence.shape != (JOINT_COUNT,):
            raise InvalidInputError("confidence must have one entry per joint")
        if np.any((self.confidence < 0) | (self.confidence > 1)):
            raise InvalidInputError("confidence must lie in [0, 1]")
        self.valid = _as_valid_array(self.valid)

    @property
    def valid_count(self) -> int:
        return int(self.valid.sum())


@dataclass
class Skeleton3D:
    """Per-joint world/camera positions (m) with validity flags."""

    joints: np.ndarray         # (17, 3)
    valid: np.ndarray = None   # (17,)

    def __post_init__(self):
        self.joints = _as_joint_array(self.joints, 3, "joints")
        self.valid = _as_valid_array(self.valid)

    @property
    def valid_count(self) -> int:
        return int(self.valid.sum())

    def root_centered(self) -> "Skeleton3D":
        if not self.valid[PELVIS]:
            raise DegenerateInputError("cannot root-center: pelvis is invalid")
        return Skeleton3D(self.joints - self.joints[PELVIS], self.valid.copy())

    def anchor_length(self, anchor: str) -> float:
        """Length of the hip span or the pelvis-thorax span."""
        if anchor == "hip":
            a, b = L_HIP, R_HIP
        elif anchor == "backbone":
            a, b = PELVIS, THORAX
        else:
            raise InvalidInputError(f"unknown anchor {anchor!r} (expected 'hip' or 'backbone')")
        if not (self.valid[a] and self.valid[b]):
            raise DegenerateInputError(f"anchor '{anchor}' requires both of its joints to be valid")
        return float(np.linalg.norm(self.joints[a] - self.joints[b]))


def limb_lengths(skeleton: Skeleton3D) -> np.ndarray:
    """Euclidean parent-child distances; NaN where either endpoint is invalid."""
    lengths = np.full(len(LIMBS), np.nan)
    for i, (parent, child) in enumerate(LIMBS):
        if skeleton.valid[parent] and skeleton.valid[child]:
            lengths[i] = np.linalg.norm(skeleton.joints[child] - skeleton.joints[parent])
    return lengths
