"""Detection and 2-D pose evaluation.

Bounding-box matching is greedy in descending IoU with one-to-one pairing;
unmatched estimates are false positives and unmatched ground truth boxes are
false negatives.  Areas are reported as fractions of the total ground-truth
box area.  Joint quality uses the mean per-joint distance from estimated 2-D
joints to the nearest human-mask pixel, computed with an exact Euclidean
distance transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateInputError, DimensionMismatchError, InvalidInputError
from .skeleton.pose import Skeleton2D
from .skeleton.topology import JOINT_COUNT

DEFAULT_MIN_BOX_WIDTH_PX = 7
DEFAULT_MIN_BOX_HEIGHT_PX = 25
DEFAULT_ENLARGE_FRACTION = 0.10


@dataclass(frozen=True)
class BBox:
    """Axis-aligned image box: top-left (x, y), size (w, h), all in px."""

    x: float
    y: float
    w: float
    h: float
    label: str = "person"
    score: float = 1.0

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise InvalidInputError(f"box size must be positive, got {self.w}x{self.h}")
        if not (0.0 <= self.score <= 1.0):
            raise InvalidInputError(f"score {self.score} outside [0, 1]")

    @property
    def area(self) -> float:
        return self.w * self.h


def _intersection_area(a: BBox, b: BBox) -> float:
    dx = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    dy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    return max(0.0, dx) * max(0.0, dy)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union, in [0, 1]."""
    inter = _intersection_area(a, b)
    return inter / (a.area + b.area - inter)


def crossover(gt: BBox, est: BBox, denominator: str = "gt") -> float:
    """Fraction of the ground-truth box covered by the estimate.

    ``denominator="est"`` normalizes by the estimated box instead, for
    callers who want the reverse reading of the overlap.
    """
    if denominator == "gt":
        return _intersection_area(gt, est) / gt.area
    if denominator == "est":
        return _intersection_area(gt, est) / est.area
    raise InvalidInputError(f"unknown denominator {denominator!r} (expected 'gt' or 'est')")


@dataclass
class MatchReport:
    """Aggregated detection and pose metrics for one evaluation run."""

    true_positives: int = 0
    false_positives: int = 0
    false_negatives: int = 0
    tp_area: float = 0.0  # fractions of total GT box area
    fp_area: float = 0.0
    fn_area: float = 0.0
    mpjds: float = math.nan
    mpjds_normalized: float = math.nan
    per_joint_jds: np.ndarray = field(default_factory=lambda: np.full(JOINT_COUNT, np.nan))
    pedestrian_count: int = 0
    biker_count: int = 0
    crossover_pedestrians: float = math.nan
    crossover_bikers: float = math.nan


def greedy_match(
    gt: list[BBox], est: list[BBox], iou_threshold: float = 0.5
) -> list[tuple[int, int, float]]:
    """One-to-one (gt, est, iou) pairs, assigned in descending IoU order.

    Ties resolve by lowest gt index, then lowest est index, which keeps the
    matching deterministic for duplicated boxes.
    """
    if not (0.0 < iou_threshold <= 1.0):
        raise InvalidInputError(f"iou threshold {iou_threshold} outside (0, 1]")
    if not gt or not est:
        return []
    ious = np.array([[iou(g, e) for e in est] for g in gt])
    gi, ei = np.meshgrid(np.arange(len(gt)), np.arange(len(est)), indexing="ij")
    order = np.lexsort((ei.ravel(), gi.ravel(), -ious.ravel()))
    gt_taken = np.zeros(len(gt), dtype=bool)
    est_taken = np.zeros(len(est), dtype=bool)
    matches = []
    for flat in order:
        value = ious.ravel()[flat]
        if value < iou_threshold:
            break
        g, e = int(gi.ravel()[flat]), int(ei.ravel()[flat])
        if gt_taken[g] or est_taken[e]:
            continue
        gt_taken[g] = est_taken[e] = True
        matches.append((g, e, float(value)))
    return matches


def match_boxes(gt: list[BBox], est: list[BBox], iou_threshold: float = 0.5) -> MatchReport:
    """Greedy matching counts plus GT-area-normalized area fractions."""
    matches = greedy_match(gt, est, iou_threshold)
    matched_gt = {g for g, _, _ in matches}
    matched_est = {e for _, e, _ in matches}
    total_gt_area = sum(b.area for b in gt)

    report = MatchReport(
        true_positives=len(matches),
        false_positives=len(est) - len(matched_est),
        false_negatives=len(gt) - len(matched_gt),
    )
    if total_gt_area > 0:
        report.tp_area = sum(gt[g].area for g in matched_gt) / total_gt_area
        report.fn_area = sum(
            b.area for i, b in enumerate(gt) if i not in matched_gt
        ) / total_gt_area
        report.fp_area = sum(
            b.area for i, b in enumerate(est) if i not in matched_est
        ) / total_gt_area
    return report


def filter_min_size(
    boxes: list[BBox],
    min_w: float = DEFAULT_MIN_BOX_WIDTH_PX,
    min_h: float = DEFAULT_MIN_BOX_HEIGHT_PX,
) -> list[BBox]:
    """Keep boxes at least ``min_w`` wide and ``min_h`` tall (inclusive)."""
    return [b for b in boxes if b.w >= min_w and b.h >= min_h]


def enlarge_bbox(
    box: BBox,
    fraction: float = DEFAULT_ENLARGE_FRACTION,
    width: float | None = None,
    height: float | None = None,
) -> BBox:
    """Grow a box about its center, then clip it to the image when given."""
    if fraction < 0:
        raise InvalidInputError(f"enlarge fraction must be >= 0, got {fraction}")
    w = box.w * (1.0 + fraction)
    h = box.h * (1.0 + fraction)
    x = box.x + box.w / 2.0 - w / 2.0
    y = box.y + box.h / 2.0 - h / 2.0
    if width is not None:
        x0, x1 = max(x, 0.0), min(x + w, float(width))
        x, w = x0, x1 - x0
    if height is not None:
        y0, y1 = max(y, 0.0), min(y + h, float(height))
        y, h = y0, y1 - y0
    return BBox(x, y, w, h, box.label, box.score)


def _joint_pixels(skeleton: Skeleton2D, width: int, height: int) -> np.ndarray:
    """Round joints to their nearest in-bounds pixel."""
    u = np.clip(np.rint(skeleton.positions[:, 0]), 0, width - 1).astype(np.int64)
    v = np.clip(np.rint(skeleton.positions[:, 1]), 0, height - 1).astype(np.int64)
    return np.stack([u, v], axis=1)


def mpjds(skeleton: Skeleton2D, mask: np.ndarray) -> tuple[np.ndarray, float]:
    """Per-joint distance (px) to the nearest mask pixel, and their mean.

    The exact Euclidean distance transform provides, for every pixel, the
    nearest mask pixel; each valid joint is clamped into the image, rounded,
    and charged the distance to that pixel (zero on the mask itself).
    Invalid joints are NaN and excluded from the mean.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise InvalidInputError(f"mask must be 2-D, got shape {mask.shape}")
    if not mask.any():
        raise DegenerateInputError("mask is empty: no human pixels to measure against")
    if skeleton.valid_count == 0:
        raise DegenerateInputError("skeleton has no valid joints")
    height, width = mask.shape

    nearest = ndimage.distance_transform_edt(~mask, return_distances=False, return_indices=True)
    pixels = _joint_pixels(skeleton, width, height)
    distances = np.full(len(skeleton.valid), np.nan)
    for j in range(len(skeleton.valid)):
        if not skeleton.valid[j]:
            continue
        u, v = int(pixels[j, 0]), int(pixels[j, 1])
        nv, nu = int(nearest[0, v, u]), int(nearest[1, v, u])
        distances[j] = math.sqrt((u - nu) * (u - nu) + (v - nv) * (v - nv))
    return distances, float(np.mean(distances[skeleton.valid]))


def mpjds_normalized(skeleton: Skeleton2D, mask: np.ndarray, gt_box: BBox) -> float:
    """Mean joint-to-mask distance divided by the ground-truth box height."""
    if gt_box.h <= 0:
        raise DegenerateInputError(f"degenerate box height {gt_box.h}")
    _, mean = mpjds(skeleton, mask)
    return mean / gt_box.h


def per_joint_report(samples: list[np.ndarray]) -> np.ndarray:
    """Mean distance per joint over a dataset split, in topology order.

    Each sample is a per-joint distance vector with NaN for missing joints;
    joints missing from every sample stay NaN.
    """
    if not samples:
        raise InvalidInputError("per-joint report needs at least one sample")
    stacked = np.array([np.asarray(s, dtype=np.float64) for s in samples])
    if stacked.shape[1] != JOINT_COUNT:
        raise DimensionMismatchError(f"samples must have {JOINT_COUNT} entries per joint")
    counts = np.sum(~np.isnan(stacked), axis=0)
    sums = np.nansum(stacked, axis=0)
    out = np.full(JOINT_COUNT, np.nan)
    present = counts > 0
    out[present] = sums[present] / counts[present]
    return out
