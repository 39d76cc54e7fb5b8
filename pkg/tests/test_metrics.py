"""Detection matching, size/enlarge box operations, and joint-to-mask metrics."""

import math

import numpy as np
import pytest

from pedrecon import (
    BBox,
    DegenerateInputError,
    InvalidInputError,
    Skeleton2D,
    crossover,
    enlarge_bbox,
    filter_min_size,
    human_mask,
    iou,
    match_boxes,
    mpjds,
    mpjds_normalized,
    per_joint_report,
)
from pedrecon.metrics import greedy_match
from pedrecon.semantics import SemanticClass


def random_boxes(rng, count, size=200.0):
    return [
        BBox(
            float(rng.uniform(0, size)), float(rng.uniform(0, size)),
            float(rng.uniform(4, 40)), float(rng.uniform(8, 60)),
        )
        for _ in range(count)
    ]


class TestIoU:
    def test_identity(self):
        box = BBox(3.0, 4.0, 10.0, 12.0)
        assert iou(box, box) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 10, 10), BBox(100, 100, 5, 5)) == 0.0

    def test_half_offset(self):
        # 10x10 boxes offset by 5: intersection 50, union 150.
        assert iou(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10)) == pytest.approx(1 / 3)

    def test_symmetric_and_scale_invariant(self, rng):
        for _ in range(50):
            a, b = random_boxes(rng, 2)
            assert iou(a, b) == pytest.approx(iou(b, a), abs=1e-15)
            k = float(rng.uniform(0.1, 20.0))
            a_s = BBox(a.x * k, a.y * k, a.w * k, a.h * k)
            b_s = BBox(b.x * k, b.y * k, b.w * k, b.h * k)
            assert iou(a_s, b_s) == pytest.approx(iou(a, b), abs=1e-12)


class TestCrossover:
    def test_est_contains_gt(self):
        assert crossover(BBox(10, 10, 5, 5), BBox(0, 0, 50, 50)) == 1.0

    def test_disjoint(self):
        assert crossover(BBox(0, 0, 10, 10), BBox(50, 50, 10, 10)) == 0.0

    def test_half_cover(self):
        assert crossover(BBox(0, 0, 10, 10), BBox(0, 0, 5, 10)) == 0.5

    def test_asymmetry_identity(self, rng):
        # crossover(g, e) * area(g) == crossover(e, g) * area(e) == intersection.
        for _ in range(50):
            g, e = random_boxes(rng, 2)
            lhs = crossover(g, e) * g.area
            rhs = crossover(e, g) * e.area
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_alternative_denominator(self):
        g, e = BBox(0, 0, 10, 10), BBox(0, 0, 20, 10)
        assert crossover(g, e) == 1.0
        assert crossover(g, e, denominator="est") == 0.5

    def test_scale_invariance(self, rng):
        g, e = random_boxes(rng, 2)
        scaled = [BBox(b.x * 3, b.y * 3, b.w * 3, b.h * 3) for b in (g, e)]
        assert crossover(*scaled) == pytest.approx(crossover(g, e), abs=1e-12)


class TestMatchBoxes:
    def test_perfect_detector(self, rng):
        gt = random_boxes(rng, 8)
        report = match_boxes(gt, list(gt))
        assert report.true_positives == 8
        assert report.false_positives == 0 and report.false_negatives == 0
        assert report.tp_area == pytest.approx(1.0)
        assert report.fn_area == 0.0

    def test_empty_estimates(self, rng):
        gt = random_boxes(rng, 5)
        report = match_boxes(gt, [])
        assert report.false_negatives == 5
        assert report.fn_area == pytest.approx(1.0)
        assert report.true_positives == 0

    def test_counts_partition(self, rng):
        for _ in range(20):
            gt = random_boxes(rng, int(rng.integers(0, 30)))
            est = random_boxes(rng, int(rng.integers(0, 30)))
            report = match_boxes(gt, est)
            assert report.true_positives + report.false_negatives == len(gt)
            assert report.true_positives + report.false_positives == len(est)
            if gt:
                assert report.tp_area + report.fn_area == pytest.approx(1.0)

    def test_matches_independent_greedy_oracle(self, rng):
        # Oracle: repeatedly take the globally best remaining pair above the
        # threshold, with (gt, est) index tie-breaks, using its own IoU code.
        def oracle(gt, est, threshold):
            def area(b):
                return b.w * b.h

            def box_iou(a, b):
                dx = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
                dy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
                inter = max(0.0, dx) * max(0.0, dy)
                return inter / (area(a) + area(b) - inter)

            pairs = []
            free_g, free_e = set(range(len(gt))), set(range(len(est)))
            while True:
                best = None
                for g in sorted(free_g):
                    for e in sorted(free_e):
                        value = box_iou(gt[g], est[e])
                        if value >= threshold and (best is None or value > best[0]):
                            best = (value, g, e)
                if best is None:
                    return pairs
                pairs.append((best[1], best[2]))
                free_g.discard(best[1])
                free_e.discard(best[2])

        for trial in range(10):
            gt = random_boxes(rng, 50)
            est = random_boxes(rng, 50)
            expected = oracle(gt, est, 0.5)
            got = [(g, e) for g, e, _ in greedy_match(gt, est, 0.5)]
            assert sorted(got) == sorted(expected)
            report = match_boxes(gt, est, 0.5)
            assert report.true_positives == len(expected)

    def test_threshold_validated(self):
        with pytest.raises(InvalidInputError):
            match_boxes([], [], iou_threshold=0.0)


class TestFilterMinSize:
    def test_narrow_box_removed(self):
        assert filter_min_size([BBox(0, 0, 6, 30)]) == []

    def test_boundary_kept(self):
        boxes = [BBox(0, 0, 7, 25)]
        assert filter_min_size(boxes) == boxes

    def test_short_box_removed(self):
        assert filter_min_size([BBox(0, 0, 30, 24)]) == []

    def test_empty(self):
        assert filter_min_size([]) == []

    def test_never_increases_false_positives(self, rng):
        for _ in range(20):
            gt = random_boxes(rng, 20)
            est = random_boxes(rng, 25) + [
                BBox(float(rng.uniform(0, 200)), float(rng.uniform(0, 200)), 3.0, 10.0)
                for _ in range(5)
            ]
            before = match_boxes(gt, est).false_positives
            after = match_boxes(gt, filter_min_size(est)).false_positives
            assert after <= before


class TestEnlargeBBox:
    def test_zero_fraction_is_identity(self):
        box = BBox(50.0, 50.0, 100.0, 200.0)
        assert enlarge_bbox(box, 0.0) == box

    def test_ten_percent_about_center(self):
        # 100x200 at (50, 50): center (100, 150) -> 110x220 at (45, 40).
        out = enlarge_bbox(BBox(50.0, 50.0, 100.0, 200.0), 0.10)
        assert (out.x, out.y, out.w, out.h) == pytest.approx((45.0, 40.0, 110.0, 220.0))

    def test_clipped_to_image(self):
        out = enlarge_bbox(BBox(0.0, 0.0, 100.0, 100.0), 0.10, width=640, height=480)
        assert out.x == 0.0 and out.y == 0.0
        assert out.x + out.w <= 640 and out.y + out.h <= 480
        out = enlarge_bbox(BBox(600.0, 440.0, 40.0, 40.0), 0.10, width=640, height=480)
        assert out.x + out.w == 640.0 and out.y + out.h == 480.0

    def test_negative_fraction_rejected(self):
        with pytest.raises(InvalidInputError):
            enlarge_bbox(BBox(0, 0, 10, 10), -0.1)


def skeleton_at(points):
    positions = np.zeros((17, 2))
    valid = np.zeros(17, dtype=bool)
    for j, (u, v) in enumerate(points):
        positions[j] = (u, v)
        valid[j] = True
    return Skeleton2D(positions, np.ones(17), valid)


def brute_force_mpjds(skeleton, mask):
    """Independent oracle: per-pixel minimum over the mask."""
    height, width = mask.shape
    ys, xs = np.nonzero(mask)
    distances = np.full(17, np.nan)
    for j in range(17):
        if not skeleton.valid[j]:
            continue
        u = int(np.clip(np.rint(skeleton.positions[j, 0]), 0, width - 1))
        v = int(np.clip(np.rint(skeleton.positions[j, 1]), 0, height - 1))
        d2 = (xs - u) ** 2 + (ys - v) ** 2
        distances[j] = math.sqrt(int(d2.min()))
    mean = float(np.mean(distances[skeleton.valid]))
    return distances, mean


class TestMpjds:
    def test_joints_on_mask_have_zero_distance(self):
        mask = np.zeros((50, 50), dtype=bool)
        mask[10:20, 10:20] = True
        distances, mean = mpjds(skeleton_at([(12, 15), (19, 10)]), mask)
        assert mean == 0.0
        assert distances[0] == 0.0 and distances[1] == 0.0

    def test_single_pixel_mask_hand_computed(self):
        # Mask pixel (10, 10), joint (13, 14): distance sqrt(9 + 16) = 5.
        mask = np.zeros((30, 30), dtype=bool)
        mask[10, 10] = True
        distances, mean = mpjds(skeleton_at([(13, 14)]), mask)
        assert distances[0] == 5.0
        assert mean == 5.0

    def test_empty_mask_rejected(self):
        with pytest.raises(DegenerateInputError):
            mpjds(skeleton_at([(1, 1)]), np.zeros((10, 10), dtype=bool))

    def test_no_valid_joints_rejected(self):
        mask = np.ones((10, 10), dtype=bool)
        with pytest.raises(DegenerateInputError):
            mpjds(Skeleton2D(np.zeros((17, 2)), np.ones(17), np.zeros(17, dtype=bool)), mask)

    def test_joints_clamped_into_image(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[0, 0] = True
        distances, _ = mpjds(skeleton_at([(-5.0, 0.0)]), mask)
        assert distances[0] == 0.0  # clamped to (0, 0), on the mask

    def test_equals_brute_force_oracle(self, rng):
        for _ in range(20):
            mask = np.zeros((64, 96), dtype=bool)
            for _ in range(int(rng.integers(1, 4))):
                y, x = rng.integers(0, 50), rng.integers(0, 80)
                mask[y:y + int(rng.integers(2, 12)), x:x + int(rng.integers(2, 12))] = True
            points = [(float(rng.uniform(0, 96)), float(rng.uniform(0, 64)))
                      for _ in range(int(rng.integers(1, 17)))]
            skeleton = skeleton_at(points)
            got_d, got_m = mpjds(skeleton, mask)
            exp_d, exp_m = brute_force_mpjds(skeleton, mask)
            np.testing.assert_array_equal(got_d, exp_d)
            assert got_m == exp_m


class TestMpjdsNormalized:
    def test_division_by_box_height(self):
        mask = np.zeros((200, 200), dtype=bool)
        mask[100, 100] = True
        value = mpjds_normalized(skeleton_at([(100, 110)]), mask, BBox(0, 0, 50, 100))
        assert value == pytest.approx(0.10)

    def test_zero_distance(self):
        mask = np.ones((20, 20), dtype=bool)
        assert mpjds_normalized(skeleton_at([(5, 5)]), mask, BBox(0, 0, 10, 100)) == 0.0

    def test_mean_equal_to_height_gives_one(self):
        mask = np.zeros((200, 200), dtype=bool)
        mask[0, 0] = True
        value = mpjds_normalized(skeleton_at([(0.0, 100.0)]), mask, BBox(0, 0, 50, 100))
        assert value == pytest.approx(1.0)


class TestPerJointReport:
    def test_single_sample_passthrough(self):
        sample = np.arange(17, dtype=float)
        np.testing.assert_array_equal(per_joint_report([sample]), sample)

    def test_two_sample_mean(self):
        a = np.full(17, 2.0)
        b = np.full(17, 4.0)
        np.testing.assert_array_equal(per_joint_report([a, b]), np.full(17, 3.0))

    def test_nan_joints_excluded_from_mean(self):
        a = np.full(17, 2.0)
        b = np.full(17, np.nan)
        b[0] = 6.0
        out = per_joint_report([a, b])
        assert out[0] == 4.0
        assert np.all(out[1:] == 2.0)

    def test_feet_distances_dominate(self, rng):
        samples = []
        for _ in range(40):
            base = rng.uniform(1.0, 3.0, 17)
            base[[5, 6]] *= 2.0  # ankles are twice as far off
            samples.append(base)
        report = per_joint_report(samples)
        assert set(np.argsort(report)[-2:]) == {5, 6}

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            per_joint_report([])


class TestHumanMask:
    def test_person_and_rider_merged(self):
        seg = np.zeros((10, 10), dtype=np.uint8)
        seg[1, 1] = int(SemanticClass.PERSON)
        seg[2, 2] = int(SemanticClass.RIDER)
        seg[3, 3] = int(SemanticClass.CAR)
        mask = human_mask(seg)
        assert mask[1, 1] and mask[2, 2] and not mask[3, 3]

    def test_adjacent_bike_conditionally_included(self):
        seg = np.zeros((10, 10), dtype=np.uint8)
        seg[4, 4] = int(SemanticClass.RIDER)
        seg[4, 5] = int(SemanticClass.BIKE)   # touches the rider
        seg[0, 9] = int(SemanticClass.BIKE)   # isolated bike
        off = human_mask(seg, include_adjacent_bikes=False)
        on = human_mask(seg, include_adjacent_bikes=True)
        assert not off[4, 5]
        assert on[4, 5] and not on[0, 9]
