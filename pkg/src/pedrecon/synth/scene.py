"""Synthetic stereo scenes with analytically known ground truth.

A scene is a ground plane, a few axis-aligned boxes (buildings, vegetation,
parked cars) and capsule-limb pedestrians walking straight lines, observed
by a camera riding a dead-reckoned vehicle trajectory.  Rendering is a
per-pixel analytic ray cast, so every disparity value satisfies
d = fx * baseline / Z exactly until it is quantized, and every ground-truth
box is the tight bound of the pixels its pedestrian actually won.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..disparity import DisparityMap
from ..errors import InvalidInputError
from ..geometry import (
    EARTH_RADIUS_M,
    CameraIntrinsics,
    GpsSample,
    OdometrySample,
    RigidPose,
    Trajectory,
    integrate_odometry,
    project_point,
)
from ..metrics import BBox
from ..semantics import SemanticClass
from ..skeleton.pose import Skeleton2D, Skeleton3D
from ..skeleton.topology import JOINT_COUNT
from .body import PedestrianConfig, body_capsules, pedestrian_skeleton
from .primitives import ray_aabb, ray_capsule, ray_plane_z

Corner = tuple[float, float, float]
BoxSpec = tuple[Corner, Corner]

_INVALID_DEPTH = np.inf


@dataclass(frozen=True)
class DetectorNoise:
    """Synthetic detector imperfections applied to ground-truth boxes."""

    jitter_sigma: float = 2.0     # px, on box corner and size
    dropout: float = 0.1          # probability a box goes undetected
    spurious_rate: float = 0.05   # expected spurious boxes per GT box
    spurious_max_w: float = 6.0   # spurious boxes stay below the size filter
    spurious_max_h: float = 24.0

    def __post_init__(self):
        if not (0.0 <= self.dropout <= 1.0):
            raise InvalidInputError("dropout must lie in [0, 1]")
        if self.jitter_sigma < 0 or self.spurious_rate < 0:
            raise InvalidInputError("noise magnitudes must be non-negative")


@dataclass(frozen=True)
class SceneConfig:
    seed: int = 0
    frame_count: int = 30
    frame_rate: float = 17.0
    camera: CameraIntrinsics = field(
        default_factory=lambda: CameraIntrinsics(1000.0, 1000.0, 192.0, 192.0, 0.2, 384, 384)
    )
    camera_height: float = 1.5
    vehicle_speed: tuple[float, ...] | float = 1.0
    vehicle_yaw_rate: tuple[float, ...] | float = 0.0
    ground: bool = True
    buildings: tuple[BoxSpec, ...] = ()
    vegetation: tuple[BoxSpec, ...] = ()
    cars: tuple[BoxSpec, ...] = ()
    pedestrians: tuple[PedestrianConfig, ...] = ()
    gps_noise_sigma: float = 0.0
    gps_reference: tuple[float, float] = (50.0, 8.0)
    detector_noise: DetectorNoise | None = None

    def __post_init__(self):
        if self.frame_count < 1:
            raise InvalidInputError(f"frame_count must be >= 1, got {self.frame_count}")
        if self.frame_rate <= 0:
            raise InvalidInputError("frame_rate must be positive")
        if self.gps_noise_sigma < 0:
            raise InvalidInputError("gps_noise_sigma must be non-negative")

    def profile(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-frame (speed, yaw_rate) arrays from scalars or sequences."""
        def expand(value, name):
            if np.isscalar(value):
                return np.full(self.frame_count, float(value))
            arr = np.asarray(value, dtype=np.float64)
            if arr.shape != (self.frame_count,):
                raise InvalidInputError(f"{name} must be scalar or one value per frame")
            return arr

        return expand(self.vehicle_speed, "vehicle_speed"), expand(
            self.vehicle_yaw_rate, "vehicle_yaw_rate"
        )


@dataclass
class FrameData:
    index: int
    timestamp: float
    pose: RigidPose                      # ground-truth camera pose
    disparity: DisparityMap              # exact surface disparity (unquantized)
    segmentation: np.ndarray             # (H, W) uint8 class ids
    pedestrian_ids: np.ndarray           # (H, W) int32, -1 where no pedestrian
    gt_boxes: tuple[tuple[int, BBox], ...]   # (pedestrian index, tight box)
    skeletons_3d: tuple[Skeleton3D, ...]     # world frame, one per pedestrian
    skeletons_2d: tuple[Skeleton2D, ...]     # projected, one per pedestrian
    odometry: OdometrySample
    gps: GpsSample
    est_boxes: tuple[BBox, ...] | None = None  # detector-noise boxes, if configured


@dataclass
class SceneBundle:
    config: SceneConfig
    trajectory: Trajectory
    frames: tuple[FrameData, ...]

    @property
    def odometry_samples(self) -> tuple[OdometrySample, ...]:
        return tuple(f.odometry for f in self.frames)

    @property
    def gps_samples(self) -> tuple[GpsSample, ...]:
        return tuple(f.gps for f in self.frames)


@lru_cache(maxsize=4)
def _camera_rays(camera: CameraIntrinsics) -> np.ndarray:
    """Camera-frame direction per pixel, z component 1 so t equals depth."""
    u, v = np.meshgrid(np.arange(camera.width), np.arange(camera.height))
    rays = np.stack(
        [(u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, np.ones(u.shape)],
        axis=-1,
    )
    rays.flags.writeable = False
    return rays


def _static_boxes(config: SceneConfig) -> list[tuple[BoxSpec, SemanticClass]]:
    out: list[tuple[BoxSpec, SemanticClass]] = []
    out += [(b, SemanticClass.BUILDING) for b in config.buildings]
    out += [(b, SemanticClass.VEGETATION) for b in config.vegetation]
    out += [(b, SemanticClass.CAR) for b in config.cars]
    return out


def _pedestrian_aoi(
    skeleton: Skeleton3D, camera: CameraIntrinsics, inv_pose: RigidPose, margin_m: float
) -> tuple[int, int, int, int] | None:
    """Pixel rectangle that can contain the pedestrian, or None if off-screen."""
    cam = inv_pose.apply(skeleton.joints)
    cam = cam[cam[:, 2] > 0.2]
    if len(cam) == 0:
        return None
    z_min = cam[:, 2].min()
    margin_px = camera.fx * margin_m / z_min + 4.0
    us = camera.cx + camera.fx * cam[:, 0] / cam[:, 2]
    vs = camera.cy + camera.fy * cam[:, 1] / cam[:, 2]
    u0 = int(max(0, math.floor(us.min() - margin_px)))
    u1 = int(min(camera.width, math.ceil(us.max() + margin_px)))
    v0 = int(max(0, math.floor(vs.min() - margin_px)))
    v1 = int(min(camera.height, math.ceil(vs.max() + margin_px)))
    if u0 >= u1 or v0 >= v1:
        return None
    return u0, u1, v0, v1


def _render(
    config: SceneConfig, pose: RigidPose, time: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, tuple[Skeleton3D, ...]]:
    """Ray cast one frame: (depth, class ids, pedestrian ids, skeletons)."""
    camera = config.camera
    origin = pose.translation
    dirs = _camera_rays(camera) @ pose.rotation.T

    depth = np.full((camera.height, camera.width), _INVALID_DEPTH)
    classes = np.full(depth.shape, int(SemanticClass.STATIC), dtype=np.uint8)
    ped_ids = np.full(depth.shape, -1, dtype=np.int32)

    def commit(t: np.ndarray, class_id: int, view=np.s_[:, :], ped: int = -1) -> None:
        closer = t < depth[view]
        depth[view] = np.where(closer, t, depth[view])
        classes[view][closer] = class_id
        ped_ids[view][closer] = ped

    if config.ground:
        commit(ray_plane_z(origin, dirs, 0.0), int(SemanticClass.ROAD))
    for box, semantic in _static_boxes(config):
        commit(ray_aabb(origin, dirs, box[0], box[1]), int(semantic))

    inv_pose = pose.inverse()
    skeletons = []
    for ped_index, ped in enumerate(config.pedestrians):
        skeleton = pedestrian_skeleton(ped, time)
        skeletons.append(skeleton)
        capsules = body_capsules(skeleton, ped.height)
        max_r = max(r for _, _, r in capsules)
        aoi = _pedestrian_aoi(skeleton, camera, inv_pose, max_r)
        if aoi is None:
            continue
        u0, u1, v0, v1 = aoi
        view = np.s_[v0:v1, u0:u1]
        sub = dirs[view]
        t_ped = np.full(sub.shape[:2], np.inf)
        for a, b, r in capsules:
            t_ped = np.minimum(t_ped, ray_capsule(origin, sub, a, b, r))
        commit(t_ped, int(SemanticClass.PERSON), view, ped_index)

    return depth, classes, ped_ids, tuple(skeletons)


def _project_skeleton(
    skeleton: Skeleton3D, camera: CameraIntrinsics, inv_pose: RigidPose
) -> Skeleton2D:
    cam = inv_pose.apply(skeleton.joints)
    positions = np.zeros((JOINT_COUNT, 2))
    valid = np.zeros(JOINT_COUNT, dtype=bool)
    in_front = cam[:, 2] > 0.2
    z = np.where(in_front, cam[:, 2], 1.0)
    positions[:, 0] = camera.cx + camera.fx * cam[:, 0] / z
    positions[:, 1] = camera.cy + camera.fy * cam[:, 1] / z
    u_px = np.rint(positions[:, 0])
    v_px = np.rint(positions[:, 1])
    valid = (
        in_front
        & (u_px >= 0) & (u_px <= camera.width - 1)
        & (v_px >= 0) & (v_px <= camera.height - 1)
    )
    positions[~in_front] = 0.0
    return Skeleton2D(positions, np.ones(JOINT_COUNT), valid)


def _tight_boxes(ped_ids: np.ndarray, count: int) -> tuple[tuple[int, BBox], ...]:
    boxes = []
    for ped in range(count):
        vs, us = np.nonzero(ped_ids == ped)
        if us.size == 0:
            continue
        boxes.append((
            ped,
            BBox(
                float(us.min()),
                float(vs.min()),
                float(us.max() - us.min() + 1),
                float(vs.max() - vs.min() + 1),
                label="person",
            ),
        ))
    return tuple(boxes)


def render_frame(
    config: SceneConfig, pose: RigidPose, time: float = 0.0, quantize: bool = False
) -> tuple[DisparityMap, np.ndarray]:
    """Render the scene from one camera pose: (disparity, segmentation).

    Pixels whose rays miss every primitive get an invalid disparity and the
    generic static class.  With ``quantize`` the disparity goes through the
    16-bit file encoding, exactly as a save/load round trip would.
    """
    camera = config.camera
    depth, classes, _, _ = _render(config, pose, time)
    hit = np.isfinite(depth)
    values = np.where(hit, camera.fx * camera.baseline / np.where(hit, depth, 1.0), 0.0)
    dmap = DisparityMap(values, hit)
    if quantize:
        dmap = dmap.quantized()
    return dmap, classes


def _position_to_gps(x: float, y: float, reference: tuple[float, float]) -> tuple[float, float]:
    lat_ref, lon_ref = reference
    lat = lat_ref + math.degrees(y / EARTH_RADIUS_M)
    lon = lon_ref + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(lat_ref))))
    return lat, lon


def perturb_gps(
    trajectory: Trajectory,
    sigma: float,
    seed: int,
    reference: tuple[float, float] = (50.0, 8.0),
) -> tuple[GpsSample, ...]:
    """GPS fixes for a trajectory with independent planar Gaussian noise.

    The world origin maps to ``reference`` (lat, lon); noise of the given
    standard deviation (meters) is added east and north before conversion.
    """
    if sigma < 0:
        raise InvalidInputError("sigma must be non-negative")
    rng = np.random.default_rng([seed, 0x675])
    noise = rng.normal(0.0, sigma, (len(trajectory), 2)) if sigma > 0 else np.zeros(
        (len(trajectory), 2)
    )
    samples = []
    for i, (timestamp, pose) in enumerate(trajectory):
        x = pose.translation[0] + noise[i, 0]
        y = pose.translation[1] + noise[i, 1]
        lat, lon = _position_to_gps(x, y, reference)
        samples.append(GpsSample(float(timestamp), lat, lon))
    return tuple(samples)


def perturb_detections(
    boxes: list[BBox],
    width: int,
    height: int,
    noise: DetectorNoise,
    rng: np.random.Generator,
) -> tuple[BBox, ...]:
    """Jitter, drop, and add spurious small boxes to emulate a detector."""
    out = []
    for box in boxes:
        if rng.random() < noise.dropout:
            continue
        jitter = rng.normal(0.0, noise.jitter_sigma, 4)
        w = max(1.0, box.w + jitter[2])
        h = max(1.0, box.h + jitter[3])
        x = min(max(box.x + jitter[0], 0.0), width - w)
        y = min(max(box.y + jitter[1], 0.0), height - h)
        out.append(BBox(x, y, w, h, box.label, float(rng.uniform(0.5, 1.0))))
    for _ in range(int(rng.binomial(max(len(boxes), 1), min(noise.spurious_rate, 1.0)))):
        w = float(rng.uniform(2.0, noise.spurious_max_w))
        h = float(rng.uniform(5.0, noise.spurious_max_h))
        x = float(rng.uniform(0.0, max(width - w, 1.0)))
        y = float(rng.uniform(0.0, max(height - h, 1.0)))
        out.append(BBox(x, y, w, h, "person", float(rng.uniform(0.05, 0.5))))
    return tuple(out)


def generate_scene(config: SceneConfig) -> SceneBundle:
    """Deterministically generate the full per-frame bundle for a config."""
    speeds, yaw_rates = config.profile()
    timestamps = np.arange(config.frame_count) / config.frame_rate
    odometry = tuple(
        OdometrySample(float(t), float(v), float(w))
        for t, v, w in zip(timestamps, speeds, yaw_rates)
    )
    initial = RigidPose.from_heading(0.0, (0.0, 0.0, config.camera_height))
    trajectory = integrate_odometry(odometry, initial)
    gps = perturb_gps(trajectory, config.gps_noise_sigma, config.seed, config.gps_reference)

    camera = config.camera
    frames = []
    for i, (timestamp, pose) in enumerate(trajectory):
        time = float(timestamp)
        depth, classes, ped_ids, skeletons = _render(config, pose, time)
        hit = np.isfinite(depth)
        values = np.where(hit, camera.fx * camera.baseline / np.where(hit, depth, 1.0), 0.0)
        dmap = DisparityMap(values, hit)
        inv_pose = pose.inverse()
        skeletons_2d = tuple(_project_skeleton(s, camera, inv_pose) for s in skeletons)
        gt_boxes = _tight_boxes(ped_ids, len(config.pedestrians))

        est_boxes = None
        if config.detector_noise is not None:
            rng = np.random.default_rng([config.seed, 0xD0, i])
            est_boxes = perturb_detections(
                [b for _, b in gt_boxes], camera.width, camera.height,
                config.detector_noise, rng,
            )

        frames.append(FrameData(
            index=i,
            timestamp=time,
            pose=pose,
            disparity=dmap,
            segmentation=classes,
            pedestrian_ids=ped_ids,
            gt_boxes=gt_boxes,
            skeletons_3d=skeletons,
            skeletons_2d=skeletons_2d,
            odometry=odometry[i],
            gps=gps[i],
            est_boxes=est_boxes,
        ))
    return SceneBundle(config, trajectory, tuple(frames))


def _box_specs(raw, name: str) -> tuple[BoxSpec, ...]:
    out = []
    for spec in raw:
        if len(spec) != 2 or len(spec[0]) != 3 or len(spec[1]) != 3:
            raise InvalidInputError(f"{name} entries must be [[x,y,z],[x,y,z]] corner pairs")
        out.append((tuple(float(c) for c in spec[0]), tuple(float(c) for c in spec[1])))
    return tuple(out)


def scene_config_from_dict(data: dict) -> SceneConfig:
    """Build a SceneConfig from a JSON-style dict (unknown keys rejected)."""
    known = {
        "seed", "frame_count", "frame_rate", "camera", "camera_height",
        "vehicle_speed", "vehicle_yaw_rate", "ground", "buildings", "vegetation",
        "cars", "pedestrians", "gps_noise_sigma", "gps_reference", "detector_noise",
    }
    unknown = set(data) - known
    if unknown:
        raise InvalidInputError(f"unknown scene config keys: {sorted(unknown)}")

    kwargs: dict = {}
    for key in ("seed", "frame_count", "frame_rate", "camera_height",
                "gps_noise_sigma", "ground"):
        if key in data:
            kwargs[key] = data[key]
    if "camera" in data:
        kwargs["camera"] = CameraIntrinsics(**data["camera"])
    for key in ("vehicle_speed", "vehicle_yaw_rate"):
        if key in data:
            value = data[key]
            kwargs[key] = tuple(value) if isinstance(value, (list, tuple)) else float(value)
    for key in ("buildings", "vegetation", "cars"):
        if key in data:
            kwargs[key] = _box_specs(data[key], key)
    if "pedestrians" in data:
        kwargs["pedestrians"] = tuple(
            PedestrianConfig(**{**p, "start_xy": tuple(p["start_xy"])})
            for p in data["pedestrians"]
        )
    if "gps_reference" in data:
        kwargs["gps_reference"] = tuple(data["gps_reference"])
    if data.get("detector_noise") is not None:
        kwargs["detector_noise"] = DetectorNoise(**data["detector_noise"])
    return SceneConfig(**kwargs)


def scene_config_to_dict(config: SceneConfig) -> dict:
    camera = config.camera
    data = {
        "seed": config.seed,
        "frame_count": config.frame_count,
        "frame_rate": config.frame_rate,
        "camera": {
            "fx": camera.fx, "fy": camera.fy, "cx": camera.cx, "cy": camera.cy,
            "baseline": camera.baseline, "width": camera.width, "height": camera.height,
        },
        "camera_height": config.camera_height,
        "vehicle_speed": list(config.vehicle_speed)
        if isinstance(config.vehicle_speed, tuple) else config.vehicle_speed,
        "vehicle_yaw_rate": list(config.vehicle_yaw_rate)
        if isinstance(config.vehicle_yaw_rate, tuple) else config.vehicle_yaw_rate,
        "ground": config.ground,
        "buildings": [[list(a), list(b)] for a, b in config.buildings],
        "vegetation": [[list(a), list(b)] for a, b in config.vegetation],
        "cars": [[list(a), list(b)] for a, b in config.cars],
        "pedestrians": [
            {
                "start_xy": list(p.start_xy),
                "heading": p.heading,
                "speed": p.speed,
                "height": p.height,
                "gait_amplitude": p.gait_amplitude,
                "phase": p.phase,
                **({"stride_m": p.stride_m} if p.stride_m is not None else {}),
            }
            for p in config.pedestrians
        ],
        "gps_noise_sigma": config.gps_noise_sigma,
        "gps_reference": list(config.gps_reference),
    }
    if config.detector_noise is not None:
        noise = config.detector_noise
        data["detector_noise"] = {
            "jitter_sigma": noise.jitter_sigma,
            "dropout": noise.dropout,
            "spurious_rate": noise.spurious_rate,
            "spurious_max_w": noise.spurious_max_w,
            "spurious_max_h": noise.spurious_max_h,
        }
    return data


def exact_joint_disparity(
    frame: FrameData, camera: CameraIntrinsics, window: int = 5
) -> DisparityMap:
    """Disparity map with each visible joint's exact disparity stamped in.

    A rendered map carries the disparity of the body *surface*; a stereo
    matcher centered on a joint, however, measures the joint feature itself.
    Stamping a small window of the analytically exact joint disparity over
    the rendered frame produces the idealized measurement that round-trip
    tests triangulate against.
    """
    if window < 1 or window % 2 == 0:
        raise InvalidInputError(f"window must be odd and positive, got {window}")
    values = frame.disparity.values.copy()
    valid = frame.disparity.valid.copy()
    inv_pose = frame.pose.inverse()
    half = window // 2
    for skeleton in frame.skeletons_3d:
        cam = inv_pose.apply(skeleton.joints)
        for j in range(JOINT_COUNT):
            if cam[j, 2] <= 0.2:
                continue
            u, v, d = project_point(cam[j], camera)
            cu, cv = int(round(u)), int(round(v))
            if not (0 <= cu < camera.width and 0 <= cv < camera.height):
                continue
            rows = slice(max(0, cv - half), min(camera.height, cv + half + 1))
            cols = slice(max(0, cu - half), min(camera.width, cu + half + 1))
            values[rows, cols] = d
            valid[rows, cols] = True
    return DisparityMap(values, valid)
