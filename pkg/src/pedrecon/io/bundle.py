"""Write a synthetic scene bundle as the standard on-disk input layout."""

from __future__ import annotations

from pathlib import Path

from ..skeleton.topology import JOINT_COUNT
from ..synth.scene import SceneBundle, exact_joint_disparity
from . import formats


def write_scene_bundle(
    bundle: SceneBundle, out_dir, joint_exact_disparity: bool = False
) -> dict[str, Path]:
    """Emit every input file a pipeline run needs; returns name -> path.

    With ``joint_exact_disparity`` the disparity frames carry the exact
    joint disparities stamped over the rendered surfaces, so a downstream
    pose stage can reproduce the ground-truth skeletons.
    """
    out_dir = Path(out_dir)
    paths: dict[str, Path] = {}
    paths["calibration"] = formats.save_calibration(bundle.config.camera, out_dir / "calib.txt")
    paths["odometry"] = formats.save_odometry(bundle.odometry_samples, out_dir / "odometry.txt")
    paths["gps"] = formats.save_gps(bundle.gps_samples, out_dir / "gps.txt")
    paths["trajectory"] = formats.save_trajectory(bundle.trajectory, out_dir / "trajectory.txt")

    detections = []
    joints = []
    poses = []
    est = []
    for frame in bundle.frames:
        dmap = frame.disparity
        if joint_exact_disparity:
            dmap = exact_joint_disparity(frame, bundle.config.camera)
        formats.save_disparity(dmap, formats.frame_raster_path(out_dir / "disparity", frame.index))
        formats.save_segmentation(
            frame.segmentation, formats.frame_raster_path(out_dir / "segmentation", frame.index)
        )
        for ped_index, box in frame.gt_boxes:
            detections.append(formats.DetectionRecord(
                frame.index, box.label, box.score, box.x, box.y, box.w, box.h
            ))
        for ped_index, skeleton_2d in enumerate(frame.skeletons_2d):
            for j in range(JOINT_COUNT):
                if skeleton_2d.valid[j]:
                    joints.append(formats.JointRecord(
                        frame.index, ped_index, j,
                        float(skeleton_2d.positions[j, 0]),
                        float(skeleton_2d.positions[j, 1]),
                        float(skeleton_2d.confidence[j]),
                    ))
        for ped_index, skeleton_3d in enumerate(frame.skeletons_3d):
            poses.extend(formats.skeleton_to_records(frame.index, ped_index, skeleton_3d))
        if frame.est_boxes is not None:
            est.extend(
                formats.DetectionRecord(frame.index, b.label, b.score, b.x, b.y, b.w, b.h)
                for b in frame.est_boxes
            )

    paths["disparity_dir"] = out_dir / "disparity"
    paths["segmentation_dir"] = out_dir / "segmentation"
    paths["gt_boxes"] = formats.save_detections(detections, out_dir / "gt_boxes.txt")
    paths["gt_joints"] = formats.save_joints(joints, out_dir / "gt_joints.txt")
    paths["gt_poses"] = formats.save_poses(poses, out_dir / "gt_poses.txt")
    if est:
        paths["est_boxes"] = formats.save_detections(est, out_dir / "est_boxes.txt")
    return paths
