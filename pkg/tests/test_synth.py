"""Synthetic scene oracle: rendering, ground truth, noise models."""

import numpy as np
import pytest

from pedrecon import (
    CameraIntrinsics,
    GpsSample,
    RigidPose,
    SceneConfig,
    SemanticClass,
    exact_joint_disparity,
    generate_scene,
    gps_to_trajectory,
    perturb_gps,
    render_frame,
    triangulate_skeleton,
)
from pedrecon.synth import DetectorNoise, PedestrianConfig, perturb_detections
from pedrecon.synth.primitives import ray_aabb, ray_capsule, ray_plane_z


def small_camera():
    return CameraIntrinsics(400.0, 400.0, 80.0, 70.0, 0.2, 160, 140)


def basic_config(**overrides):
    defaults = dict(
        seed=3,
        frame_count=3,
        camera=small_camera(),
        vehicle_speed=1.0,
        vehicle_yaw_rate=0.0,
        pedestrians=(PedestrianConfig((8.0, 0.0), 0.0, 1.0, 1.75, 0.5),),
    )
    defaults.update(overrides)
    return SceneConfig(**defaults)


class TestPrimitives:
    def test_plane_hit_depth(self):
        origin = np.array([0.0, 0.0, 2.0])
        dirs = np.array([[0.0, 0.0, -1.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]])
        t = ray_plane_z(origin, dirs, 0.0)
        np.testing.assert_allclose(t[:2], [2.0, 2.0])
        assert np.isinf(t[2])

    def test_aabb_entry_distance(self):
        origin = np.zeros(3)
        dirs = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        t = ray_aabb(origin, dirs, (2.0, -1.0, -1.0), (4.0, 1.0, 1.0))
        assert t[0] == pytest.approx(2.0)
        assert np.isinf(t[1])

    def test_aabb_parallel_ray_inside_slab(self):
        origin = np.array([0.0, 0.0, 0.5])
        dirs = np.array([[1.0, 0.0, 0.0]])
        t = ray_aabb(origin, dirs, (2.0, -1.0, 0.0), (4.0, 1.0, 1.0))
        assert t[0] == pytest.approx(2.0)

    def test_capsule_cylinder_and_caps(self):
        origin = np.zeros(3)
        a, b, r = np.array([5.0, 0.0, -1.0]), np.array([5.0, 0.0, 1.0]), 0.5
        dirs = np.array([
            [1.0, 0.0, 0.0],   # hits the cylinder barrel at x = 4.5
            [1.0, 0.0, 0.3],   # hits the top cap region
            [1.0, 0.5, 0.0],   # misses sideways
        ])
        t = ray_capsule(origin, dirs, a, b, r)
        assert t[0] == pytest.approx(4.5)
        assert np.isfinite(t[1])
        assert np.isinf(t[2])

    def test_degenerate_capsule_is_sphere(self):
        origin = np.zeros(3)
        center = np.array([3.0, 0.0, 0.0])
        t = ray_capsule(origin, np.array([[1.0, 0.0, 0.0]]), center, center, 0.5)
        assert t[0] == pytest.approx(2.5)


class TestRenderFrame:
    def test_ground_only_scene(self):
        config = basic_config(pedestrians=())
        pose = RigidPose.from_heading(0.0, (0.0, 0.0, 1.5))
        dmap, seg = render_frame(config, pose)
        camera = config.camera
        # Rays above the horizon row miss; below they hit the road.
        assert not dmap.valid[: int(camera.cy)].any()
        below = dmap.valid[int(camera.cy) + 1:]
        assert below.all()
        assert np.all(seg[dmap.valid] == int(SemanticClass.ROAD))
        assert np.all(seg[~dmap.valid] == int(SemanticClass.STATIC))
        # Depth decreases (disparity increases) moving down from the horizon.
        column = dmap.values[int(camera.cy) + 1:, int(camera.cx)]
        assert np.all(np.diff(column) > 0)

    def test_plane_depth_matches_formula(self):
        # Camera at height h looking level: a pixel v rows below the principal
        # point sees the ground at depth Z = h * fy / (v - cy).
        config = basic_config(pedestrians=())
        camera = config.camera
        pose = RigidPose.from_heading(0.0, (0.0, 0.0, 1.5))
        dmap, _ = render_frame(config, pose)
        for v in (100, 120, 139):
            expected_z = 1.5 * camera.fy / (v - camera.cy)
            d = camera.fx * camera.baseline / expected_z
            assert dmap.values[v, int(camera.cx)] == pytest.approx(d, rel=1e-12)

    def test_pedestrian_height_projects_to_pinhole_size(self):
        camera = CameraIntrinsics(1000.0, 1000.0, 160.0, 150.0, 0.2, 320, 420)
        config = SceneConfig(
            seed=1, frame_count=1, camera=camera, vehicle_speed=0.0,
            pedestrians=(PedestrianConfig((10.0, 0.0), 0.0, 0.0, 1.8),),
        )
        bundle = generate_scene(config)
        boxes = bundle.frames[0].gt_boxes
        assert len(boxes) == 1
        height_px = boxes[0][1].h
        assert height_px == pytest.approx(1000.0 * 1.8 / 10.0, abs=12.0)

    def test_gt_box_is_tight_pixel_bound(self):
        bundle = generate_scene(basic_config())
        frame = bundle.frames[0]
        ys, xs = np.nonzero(frame.pedestrian_ids == 0)
        ped, box = frame.gt_boxes[0]
        assert ped == 0
        assert box.x == xs.min() and box.y == ys.min()
        assert box.w == xs.max() - xs.min() + 1
        assert box.h == ys.max() - ys.min() + 1

    def test_occlusion_by_building(self):
        # A building slab right in front of the pedestrian hides it.
        open_config = basic_config()
        blocked = basic_config(buildings=(((6.0, -2.0, 0.0), (6.5, 2.0, 3.0)),))
        open_frame = generate_scene(open_config).frames[0]
        blocked_frame = generate_scene(blocked).frames[0]
        assert (open_frame.segmentation == int(SemanticClass.PERSON)).sum() > 0
        assert (blocked_frame.segmentation == int(SemanticClass.PERSON)).sum() == 0
        assert not (blocked_frame.pedestrian_ids >= 0).any()

    def test_zero_pedestrians_means_no_person_pixels(self):
        bundle = generate_scene(basic_config(pedestrians=(), frame_count=2))
        for frame in bundle.frames:
            assert (frame.segmentation == int(SemanticClass.PERSON)).sum() == 0

    def test_same_seed_bit_identical(self):
        a = generate_scene(basic_config(gps_noise_sigma=1.0))
        b = generate_scene(basic_config(gps_noise_sigma=1.0))
        for fa, fb in zip(a.frames, b.frames):
            np.testing.assert_array_equal(fa.disparity.values, fb.disparity.values)
            np.testing.assert_array_equal(fa.segmentation, fb.segmentation)
            assert fa.gps == fb.gps
            for sa, sb in zip(fa.skeletons_3d, fb.skeletons_3d):
                np.testing.assert_array_equal(sa.joints, sb.joints)

    def test_quantize_matches_file_encoding(self):
        config = basic_config(pedestrians=())
        pose = RigidPose.from_heading(0.0, (0.0, 0.0, 1.5))
        exact, _ = render_frame(config, pose)
        quantized, _ = render_frame(config, pose, quantize=True)
        np.testing.assert_array_equal(quantized.values, exact.quantized().values)

    def test_camera_follows_odometry(self):
        config = basic_config(frame_count=4, vehicle_speed=2.0)
        bundle = generate_scene(config)
        # frame timestamps 0, 1/17, 2/17, ...; first interval borrows the second.
        positions = bundle.trajectory.positions()
        steps = np.diff(positions[:, 0])
        np.testing.assert_allclose(steps, 2.0 / 17.0, atol=1e-12)
        assert np.all(positions[:, 2] == config.camera_height)


class TestJointDisparityStamping:
    def test_round_trip_recovers_ground_truth(self):
        bundle = generate_scene(basic_config())
        camera = bundle.config.camera
        frame = bundle.frames[1]
        stamped = exact_joint_disparity(frame, camera, window=5)
        recovered = triangulate_skeleton(
            frame.skeletons_2d[0], stamped, camera, frame.pose, window=3
        )
        gt = frame.skeletons_3d[0]
        mask = recovered.valid
        assert mask.sum() >= 15
        errors = np.linalg.norm(recovered.joints[mask] - gt.joints[mask], axis=1)
        assert errors.max() < 1e-6

    def test_quantized_round_trip_depth_bound(self):
        # Depth error under 16-bit quantization: Z^2 * dd / (fx * B), dd = 1/256.
        bundle = generate_scene(basic_config())
        camera = bundle.config.camera
        frame = bundle.frames[0]
        stamped = exact_joint_disparity(frame, camera, window=5).quantized()
        recovered = triangulate_skeleton(
            frame.skeletons_2d[0], stamped, camera, frame.pose, window=3
        )
        cam_gt = frame.pose.inverse().apply(frame.skeletons_3d[0].joints)
        cam_rec = frame.pose.inverse().apply(recovered.joints)
        for j in range(17):
            if not recovered.valid[j]:
                continue
            z = cam_gt[j, 2]
            bound = z * z * (1.0 / 256.0) / (camera.fx * camera.baseline) + 1e-9
            assert abs(cam_rec[j, 2] - z) <= bound


class TestPerturbGps:
    def make_trajectory(self):
        config = basic_config(frame_count=50, pedestrians=())
        return generate_scene(config).trajectory

    def test_zero_sigma_round_trips_exactly(self):
        trajectory = self.make_trajectory()
        samples = perturb_gps(trajectory, 0.0, seed=0, reference=(50.0, 8.0))
        recovered = gps_to_trajectory(samples, GpsSample(-1.0, 50.0, 8.0))
        np.testing.assert_allclose(
            recovered.positions()[:, :2], trajectory.positions()[:, :2], atol=1e-6
        )

    def test_noise_magnitude(self):
        config = basic_config(frame_count=1000, vehicle_speed=0.0, pedestrians=())
        trajectory = generate_scene(config).trajectory
        samples = perturb_gps(trajectory, 2.0, seed=5, reference=(50.0, 8.0))
        recovered = gps_to_trajectory(samples, GpsSample(-1.0, 50.0, 8.0))
        offsets = recovered.positions()[:, :2] - trajectory.positions()[:, :2]
        std = offsets.std()
        assert abs(std - 2.0) / 2.0 < 0.10

    def test_fixed_seed_reproducible(self):
        trajectory = self.make_trajectory()
        a = perturb_gps(trajectory, 1.5, seed=9)
        b = perturb_gps(trajectory, 1.5, seed=9)
        assert a == b
        c = perturb_gps(trajectory, 1.5, seed=10)
        assert a != c


class TestPerturbDetections:
    def test_rates_and_determinism(self, rng):
        boxes = [
            __import__("pedrecon").BBox(20.0 * i + 5, 30.0, 18.0, 40.0)
            for i in range(6)
        ]
        noise = DetectorNoise(jitter_sigma=2.0, dropout=0.5, spurious_rate=0.5)
        a = perturb_detections(boxes, 160, 140, noise, np.random.default_rng(11))
        b = perturb_detections(boxes, 160, 140, noise, np.random.default_rng(11))
        assert a == b
        spurious = [box for box in a if box.w < 7 or box.h < 25]
        assert spurious  # sub-threshold boxes are generated as spurious

    def test_zero_noise_passthrough(self):
        import pedrecon

        boxes = [pedrecon.BBox(10.0, 10.0, 20.0, 50.0)]
        noise = DetectorNoise(jitter_sigma=0.0, dropout=0.0, spurious_rate=0.0)
        out = perturb_detections(boxes, 160, 140, noise, np.random.default_rng(0))
        assert len(out) == 1
        assert (out[0].x, out[0].y, out[0].w, out[0].h) == (10.0, 10.0, 20.0, 50.0)
