"""Synthetic-scene oracle with analytically known ground truth."""

from .body import PedestrianConfig, body_capsules, pedestrian_skeleton
from .scene import (
    DetectorNoise,
    FrameData,
    SceneBundle,
    SceneConfig,
    exact_joint_disparity,
    generate_scene,
    perturb_detections,
    perturb_gps,
    render_frame,
)

__all__ = [
    "DetectorNoise",
    "FrameData",
    "PedestrianConfig",
    "SceneBundle",
    "SceneConfig",
    "body_capsules",
    "exact_joint_disparity",
    "generate_scene",
    "pedestrian_skeleton",
    "perturb_detections",
    "perturb_gps",
    "render_frame",
]
