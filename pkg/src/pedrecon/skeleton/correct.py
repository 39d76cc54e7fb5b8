"""Pose plausibility correction.

A triangulated skeleton can carry single-joint depth blunders (a joint that
sampled the scenery behind the person and shot away from the body).  The
correction pipeline is:

1. ``threshold_limbs`` clamps any limb longer than its proportional bound,
   dragging the child's whole subtree along rigidly.
2. ``truncated_nn`` looks up the closest plausible pose in a reference
   library under a per-joint truncated squared loss.
3. ``procrustes`` similarity-aligns that library pose onto the observation,
   using only joints that were not displaced by a clamp.

The output is the aligned library member, so it is plausible by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError, InvalidInputError
from .library import ReferenceLibrary, height_per_backbone
from .pose import Skeleton3D
from .topology import LIMBS, TOPOLOGY

ANCHOR_EPSILON_M = 1e-3
_SCALE_MODES = ("free", "hip_ratio", "backbone_ratio", "fixed")


def _anchor_length(skeleton: Skeleton3D, anchor: str, height_m: float | None) -> float:
    """Anchor length A used in the limb bound beta * ratio * A.

    ``height`` converts an externally estimated person height (for example
    from a detection box) into a backbone-equivalent anchor so the
    backbone-normalized ratio table applies unchanged.
    """
    if anchor in ("hip", "backbone"):
        return skeleton.anchor_length(anchor)
    if anchor == "height":
        if height_m is None:
            raise InvalidInputError("anchor 'height' requires height_m")
        return float(height_m) / height_per_backbone()
    raise InvalidInputError(f"unknown anchor {anchor!r} (expected 'hip', 'backbone' or 'height')")


def threshold_limbs(
    skeleton: Skeleton3D,
    library: ReferenceLibrary,
    anchor: str = "backbone",
    beta: float = 1.5,
    height_m: float | None = None,
) -> tuple[Skeleton3D, list[int]]:
    """Clamp limbs longer than ``beta * ratio * anchor_length``.

    Traverses the tree from the pelvis; an overlong limb has its child moved
    along the limb direction to exactly the bound, and the child's subtree is
    translated with it so local articulation below the clamp is preserved.

    Returns the corrected skeleton and the indices of clamped limbs.

    With the ``hip`` anchor the (backbone-normalized) ratio table is applied
    against the hip span directly, which bounds limbs proportionally tighter
    than ``backbone`` by the skeleton's hip/backbone ratio; pick ``beta``
    accordingly.
    """
    if beta <= 0:
        raise InvalidInputError("beta must be positive")
    a = _anchor_length(skeleton, anchor, height_m)
    if a <= ANCHOR_EPSILON_M:
        raise DegenerateInputError(f"degenerate anchor '{anchor}': length {a:.2e} m")

    joints = skeleton.joints.copy()
    valid = skeleton.valid.copy()
    clamped: list[int] = []
    for index, (parent, child) in enumerate(LIMBS):
        if not (valid[parent] and valid[child]):
            continue
        offset = joints[child] - joints[parent]
        length = float(np.linalg.norm(offset))
        bound = beta * library.limb_ratios[index] * a
        if length <= bound:
            continue
        correction = joints[parent] + offset * (bound / length) - joints[child]
        for joint in TOPOLOGY.subtree(child):
            joints[joint] += correction
        clamped.append(index)
    return Skeleton3D(joints, valid), clamped


def truncated_nn(
    skeleton: Skeleton3D,
    library: ReferenceLibrary,
    tau: float | None = None,
) -> tuple[int, float]:
    """Nearest library pose under a truncated per-joint squared loss.

    Query and entries are root-centered at the pelvis.  The cost against an
    entry is sum over valid joints of min(||p - q||^2, tau^2) plus tau^2 for
    every invalid joint, so a blundered or missing joint contributes at most
    a fixed charge.  When ``tau`` is None each entry uses half its own
    backbone length.  Ties resolve to the lowest index.
    """
    if len(library) == 0:
        raise DegenerateInputError("reference library is empty")
    if skeleton.valid_count < 1:
        raise DegenerateInputError("query skeleton has no valid joints")
    query = skeleton.root_centered()

    if tau is None:
        taus = 0.5 * library.backbone_lengths
    else:
        if tau <= 0:
            raise InvalidInputError("tau must be positive")
        taus = np.full(len(library), float(tau))
    tau_sq = taus**2

    sq = ((library.poses - query.joints[None, :, :]) ** 2).sum(axis=2)  # (N, 17)
    capped = np.minimum(sq, tau_sq[:, None])
    costs = capped[:, query.valid].sum(axis=1) + tau_sq * int((~query.valid).sum())
    index = int(np.argmin(costs))
    return index, float(costs[index])


@dataclass
class Alignment:
    """Similarity transform dst ~= scale * rotation @ src + translation."""

    scale: float
    rotation: np.ndarray     # (3, 3), det +1
    translation: np.ndarray  # (3,)
    residual: float          # sum of squared distances over used joints, m^2

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.translation = np.asarray(self.translation, dtype=np.float64)
        if self.scale <= 0:
            raise DegenerateInputError(f"alignment scale must be positive, got {self.scale}")
        if abs(np.linalg.det(self.rotation) - 1.0) > 1e-9:
            raise InvalidInputError("alignment rotation must have determinant +1")

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.scale * (np.asarray(points) @ self.rotation.T) + self.translation


def _ratio_scale(src: Skeleton3D, dst: Skeleton3D, anchor: str) -> float:
    num = dst.anchor_length(anchor)
    den = src.anchor_length(anchor)
    if den <= ANCHOR_EPSILON_M or num <= ANCHOR_EPSILON_M:
        raise DegenerateInputError(f"degenerate '{anchor}' anchor for ratio scaling")
    return num / den


def procrustes(
    src: Skeleton3D,
    dst: Skeleton3D,
    scale_mode: str = "free",
    fixed_scale: float | None = None,
) -> Alignment:
    """Closed-form least-squares similarity alignment of src onto dst.

    Minimizes sum ||s R q + t - p||^2 over joints valid in both skeletons via
    the SVD of the cross-covariance; a sign correction excludes reflections,
    so det(R) = +1 even for mirrored targets.  In the ratio modes the scale
    is pinned to dst_anchor / src_anchor and only R, t are optimized; with
    ``fixed`` the caller supplies the scale.

    Raises if fewer than 3 shared valid joints remain or if the shared
    configuration is collinear (rotation about the line is unobservable).
    """
    if scale_mode not in _SCALE_MODES:
        raise InvalidInputError(f"unknown scale_mode {scale_mode!r} (expected one of {_SCALE_MODES})")
    shared = src.valid & dst.valid
    n = int(shared.sum())
    if n < 3:
        raise DegenerateInputError(f"procrustes needs at least 3 shared valid joints, got {n}")

    q = src.joints[shared]
    p = dst.joints[shared]
    mu_q = q.mean(axis=0)
    mu_p = p.mean(axis=0)
    x = q - mu_q
    y = p - mu_p

    cov = y.T @ x / n
    u, d, vt = np.linalg.svd(cov)
    if d[0] <= 0.0 or d[1] < 1e-12 * d[0]:
        raise DegenerateInputError("collinear joint configuration: rotation is not determined")
    sign = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        sign[2, 2] = -1.0
    rotation = u @ sign @ vt

    if scale_mode == "free":
        variance = (x**2).sum() / n
        scale = float((d * np.diag(sign)).sum() / variance)
    elif scale_mode == "fixed":
        if fixed_scale is None or fixed_scale <= 0:
            raise InvalidInputError("scale_mode 'fixed' requires a positive fixed_scale")
        scale = float(fixed_scale)
    else:
        scale = _ratio_scale(src, dst, scale_mode.removesuffix("_ratio"))

    translation = mu_p - scale * rotation @ mu_q
    residual = float(((scale * q @ rotation.T + translation - p) ** 2).sum())
    return Alignment(scale, rotation, translation, residual)


@dataclass
class CorrectedPose:
    """Aligned library pose with the diagnostics of every correction step."""

    skeleton: Skeleton3D
    nn_index: int
    nn_cost: float
    alignment: Alignment
    clamped_limbs: tuple[int, ...]
    excluded_joints: tuple[int, ...]


def correct_pose(
    skeleton: Skeleton3D,
    library: ReferenceLibrary,
    anchor: str = "backbone",
    beta: float = 1.5,
    tau: float | None = None,
    scale_mode: str = "free",
    fixed_scale: float | None = None,
    height_m: float | None = None,
) -> CorrectedPose:
    """Full correction: clamp limbs, find the nearest plausible pose, align it.

    Joints displaced by a clamp (the clamped child and everything below it)
    are treated as missing for both the lookup and the alignment: their
    positions encode the blunder, not the person.  The truncated loss then
    charges them its flat invalid-joint penalty, and the remaining clean
    joints pin the similarity transform exactly.
    """
    thresholded, clamped = threshold_limbs(skeleton, library, anchor, beta, height_m)

    excluded = np.zeros(len(thresholded.valid), dtype=bool)
    for limb_index in clamped:
        for joint in TOPOLOGY.subtree(LIMBS[limb_index][1]):
            excluded[joint] = True
    target = Skeleton3D(thresholded.joints, thresholded.valid & ~excluded)

    nn_index, nn_cost = truncated_nn(target, library, tau)
    entry = library.skeleton(nn_index)
    alignment = procrustes(entry, target, scale_mode, fixed_scale)
    corrected = Skeleton3D(alignment.apply(entry.joints))
    return CorrectedPose(
        skeleton=corrected,
        nn_index=nn_index,
        nn_cost=nn_cost,
        alignment=alignment,
        clamped_limbs=tuple(clamped),
        excluded_joints=tuple(int(i) for i in np.nonzero(excluded)[0]),
    )
