"""Backprojection, aggregation, voxel fusion, and fixed-size car boxes."""

import numpy as np
import pytest

from pedrecon import (
    BBox,
    DimensionMismatchError,
    DisparityMap,
    InvalidInputError,
    LabeledPointCloud,
    RigidPose,
    SemanticClass,
    aggregate_clouds,
    backproject_frame,
    car_boxes_3d,
    voxelize,
)

from conftest import uniform_disparity


def road_segmentation(width, height):
    return np.full((height, width), int(SemanticClass.ROAD), dtype=np.uint8)


def test_dynamic_flag_matches_moving_object_classes_exactly():
    dynamic = {c for c in SemanticClass if c.is_dynamic}
    assert dynamic == {
        SemanticClass.PERSON, SemanticClass.RIDER,
        SemanticClass.CAR, SemanticClass.BIKE,
    }
    assert len(SemanticClass) == 13


class TestBackprojectFrame:
    def test_all_invalid_disparity_gives_empty_cloud(self, camera):
        dmap = DisparityMap.full_invalid(camera.width, camera.height)
        cloud = backproject_frame(dmap, road_segmentation(camera.width, camera.height),
                                  camera, RigidPose.identity())
        assert len(cloud) == 0

    def test_full_road_frame_counts(self, camera):
        dmap = uniform_disparity(camera.width, camera.height, 5.0)
        seg = road_segmentation(camera.width, camera.height)
        cloud = backproject_frame(dmap, seg, camera, RigidPose.identity(), stride=1)
        assert len(cloud) == camera.width * camera.height
        assert np.all(cloud.class_ids == int(SemanticClass.ROAD))

    def test_stride_subsamples_grid(self, camera):
        dmap = uniform_disparity(camera.width, camera.height, 5.0)
        seg = road_segmentation(camera.width, camera.height)
        cloud = backproject_frame(dmap, seg, camera, RigidPose.identity(), stride=4)
        assert len(cloud) == (camera.width // 4) * (camera.height // 4)

    def test_exclude_dynamic_drops_person_pixels(self, camera):
        dmap = uniform_disparity(camera.width, camera.height, 5.0)
        seg = road_segmentation(camera.width, camera.height)
        seg[10:20, 10:20] = int(SemanticClass.PERSON)
        on = backproject_frame(dmap, seg, camera, RigidPose.identity(), exclude_dynamic=True)
        off = backproject_frame(dmap, seg, camera, RigidPose.identity(), exclude_dynamic=False)
        assert np.sum(on.class_ids == int(SemanticClass.PERSON)) == 0
        assert np.sum(off.class_ids == int(SemanticClass.PERSON)) == 100
        assert len(off) - len(on) == 100

    def test_dimension_mismatch_rejected(self, camera):
        dmap = uniform_disparity(camera.width, camera.height, 5.0)
        with pytest.raises(DimensionMismatchError):
            backproject_frame(dmap, np.zeros((10, 10), dtype=np.uint8),
                              camera, RigidPose.identity())

    def test_raster_must_match_calibration(self, camera):
        dmap = uniform_disparity(64, 64, 5.0)
        with pytest.raises(DimensionMismatchError):
            backproject_frame(dmap, np.zeros((64, 64), dtype=np.uint8),
                              camera, RigidPose.identity())

    def test_points_transform_exactly_with_pose(self, camera, rng):
        dmap = uniform_disparity(camera.width, camera.height, 8.0)
        seg = road_segmentation(camera.width, camera.height)
        pose_a = RigidPose.from_heading(0.7, (1.0, -2.0, 1.5))
        pose_b = RigidPose.from_heading(-1.2, (10.0, 4.0, 0.5))
        cloud_a = backproject_frame(dmap, seg, camera, pose_a, stride=8)
        cloud_b = backproject_frame(dmap, seg, camera, pose_b, stride=8)
        assert len(cloud_a) == len(cloud_b)
        relative = np.array([
            pose_b.apply(pose_a.inverse().apply(p)) for p in cloud_a.positions
        ])
        np.testing.assert_allclose(cloud_b.positions, relative, atol=1e-9)


class TestAggregate:
    def test_zero_frames(self):
        assert len(aggregate_clouds([])) == 0

    def test_counts_add(self, camera):
        dmap = uniform_disparity(camera.width, camera.height, 5.0)
        seg = road_segmentation(camera.width, camera.height)
        a = backproject_frame(dmap, seg, camera, RigidPose.identity(), stride=4, frame_id=0)
        b = backproject_frame(dmap, seg, camera, RigidPose.identity(), stride=8, frame_id=1)
        merged = aggregate_clouds([a, b])
        assert len(merged) == len(a) + len(b)
        assert set(np.unique(merged.frame_ids)) == {0, 1}

    def test_same_scene_from_same_pose_coincides(self, camera):
        # Rendering the same static surface from the same pose twice must
        # land the duplicated points on top of each other.
        dmap = uniform_disparity(camera.width, camera.height, 5.0)
        seg = road_segmentation(camera.width, camera.height)
        pose = RigidPose.from_heading(0.3, (2.0, 1.0, 1.4))
        a = backproject_frame(dmap, seg, camera, pose, stride=4, frame_id=0)
        b = backproject_frame(dmap, seg, camera, pose, stride=4, frame_id=1)
        np.testing.assert_allclose(a.positions, b.positions, atol=1e-9)


class TestVoxelize:
    def test_empty_cloud(self):
        grid = voxelize(LabeledPointCloud.empty(), 0.25)
        assert len(grid) == 0
        assert grid.total_points == 0

    def test_eight_points_one_voxel(self):
        positions = np.full((8, 3), 0.1) + np.arange(8)[:, None] * 0.01
        cloud = LabeledPointCloud(positions, np.zeros(8, dtype=np.uint8), np.zeros(8))
        grid = voxelize(cloud, 0.25)
        assert len(grid) == 1
        key = next(iter(grid.cells))
        assert grid.count(key) == 8
        assert grid.majority_class(key) == SemanticClass.ROAD

    def test_drop_dynamic_removes_points_before_voting(self):
        positions = np.full((8, 3), 0.1)
        classes = np.array([0, 0, 0, 0, 0, 11, 11, 11], dtype=np.uint8)  # 5 road + 3 car
        cloud = LabeledPointCloud(positions, classes, np.zeros(8))
        grid = voxelize(cloud, 0.25, drop_dynamic=True)
        key = next(iter(grid.cells))
        assert grid.count(key) == 5
        assert grid.majority_class(key) == SemanticClass.ROAD
        assert grid.cells[key][int(SemanticClass.CAR)] == 0

    def test_majority_tie_breaks_to_lowest_class_id(self):
        positions = np.full((4, 3), 0.1)
        classes = np.array([1, 1, 2, 2], dtype=np.uint8)  # sidewalk vs building
        grid = voxelize(LabeledPointCloud(positions, classes, np.zeros(4)), 0.5)
        key = next(iter(grid.cells))
        assert grid.majority_class(key) == SemanticClass.SIDEWALK

    def test_histogram_mass_equals_retained_points(self, rng):
        positions = rng.uniform(-5, 5, (500, 3))
        classes = rng.integers(0, 13, 500).astype(np.uint8)
        cloud = LabeledPointCloud(positions, classes, np.zeros(500))
        grid = voxelize(cloud, 0.5)
        assert grid.total_points == 500
        dropped = voxelize(cloud, 0.5, drop_dynamic=True)
        dynamic = np.isin(classes, [9, 10, 11, 12])
        assert dropped.total_points == int((~dynamic).sum())

    def test_no_dynamic_content_after_drop(self, rng):
        positions = rng.uniform(-5, 5, (500, 3))
        classes = rng.integers(0, 13, 500).astype(np.uint8)
        grid = voxelize(LabeledPointCloud(positions, classes, np.zeros(500)), 0.5,
                        drop_dynamic=True)
        for key in grid.cells:
            assert not grid.majority_class(key).is_dynamic
            assert grid.cells[key][[9, 10, 11, 12]].sum() == 0

    def test_merge_matches_joint_voxelization(self, rng):
        positions = rng.uniform(-4, 4, (400, 3))
        classes = rng.integers(0, 13, 400).astype(np.uint8)
        frames = rng.integers(0, 2, 400)
        cloud = LabeledPointCloud(positions, classes, frames)
        a = LabeledPointCloud(positions[frames == 0], classes[frames == 0],
                              np.zeros((frames == 0).sum()))
        b = LabeledPointCloud(positions[frames == 1], classes[frames == 1],
                              np.ones((frames == 1).sum()))
        origin = np.array([-4.0, -4.0, -4.0])
        joint = voxelize(cloud, 0.5, origin=origin)
        merged = voxelize(a, 0.5, origin=origin).merge(voxelize(b, 0.5, origin=origin))
        assert set(joint.cells) == set(merged.cells)
        for key in joint.cells:
            np.testing.assert_array_equal(joint.cells[key], merged.cells[key])

    def test_merge_rejects_mismatched_layout(self):
        a = voxelize(LabeledPointCloud.empty(), 0.5, origin=np.zeros(3))
        b = voxelize(LabeledPointCloud.empty(), 0.25, origin=np.zeros(3))
        with pytest.raises(InvalidInputError):
            a.merge(b)

    def test_auto_origin_is_floored_min_corner(self):
        positions = np.array([[1.13, -0.6, 0.2], [2.0, 0.4, 0.9]])
        cloud = LabeledPointCloud(positions, np.zeros(2, dtype=np.uint8), np.zeros(2))
        grid = voxelize(cloud, 0.5)
        np.testing.assert_allclose(grid.origin, [1.0, -1.0, 0.0])


class TestCarBoxes3D:
    def make_frame(self, camera):
        values = np.zeros((camera.height, camera.width))
        valid = np.zeros_like(values, dtype=bool)
        seg = road_segmentation(camera.width, camera.height)
        return values, valid, seg

    def test_uniform_disparity_box(self, camera):
        values, valid, seg = self.make_frame(camera)
        values[20:40, 30:60] = 10.0
        valid[20:40, 30:60] = True
        seg[20:40, 30:60] = int(SemanticClass.CAR)
        box = BBox(30.0, 20.0, 30.0, 20.0, label="car")
        boxes, skipped = car_boxes_3d([box], DisparityMap(values, valid), seg,
                                      camera, RigidPose.identity())
        assert skipped == []
        z = camera.fx * camera.baseline / 10.0
        assert boxes[0].center[2] == pytest.approx(z, abs=1e-12)
        assert boxes[0].dimensions == (4.5, 1.8, 1.5)

    def test_two_cars_collapse_to_mean_disparity(self, camera):
        # Equal pixel counts at disparities 10 and 20: one box at mean 15.
        values, valid, seg = self.make_frame(camera)
        values[20:40, 30:45] = 10.0
        values[20:40, 45:60] = 20.0
        valid[20:40, 30:60] = True
        seg[20:40, 30:60] = int(SemanticClass.CAR)
        box = BBox(30.0, 20.0, 30.0, 20.0, label="car")
        boxes, _ = car_boxes_3d([box], DisparityMap(values, valid), seg,
                                camera, RigidPose.identity())
        assert boxes[0].center[2] == camera.fx * camera.baseline / 15.0

    def test_box_without_car_pixels_is_skipped_and_reported(self, camera):
        values, valid, seg = self.make_frame(camera)
        box = BBox(30.0, 20.0, 30.0, 20.0, label="car")
        boxes, skipped = car_boxes_3d([box], DisparityMap(values, valid), seg,
                                      camera, RigidPose.identity())
        assert boxes == []
        assert skipped == [(0, "no car-labeled valid disparity")]

    def test_world_yaw_follows_camera_heading(self, camera):
        values, valid, seg = self.make_frame(camera)
        values[20:40, 30:60] = 10.0
        valid[20:40, 30:60] = True
        seg[20:40, 30:60] = int(SemanticClass.CAR)
        pose = RigidPose.from_heading(0.8, (0.0, 0.0, 1.5))
        boxes, _ = car_boxes_3d([BBox(30.0, 20.0, 30.0, 20.0, label="car")],
                                DisparityMap(values, valid), seg, camera, pose)
        assert boxes[0].yaw == pytest.approx(0.8)
