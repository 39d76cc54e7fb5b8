"""Pipeline stages and the JSON-config driven orchestration.

Each stage is a plain function (reads files, calls the library, writes
files) so the CLI subcommands and ``run_pipeline`` share one code path.
``run_pipeline`` executes the stages whose keys appear in the config, in a
fixed order: synth, trajectory, reconstruct, pose, evaluate.  Failures
surface as ``PipelineStageError`` carrying the stage name while keeping the
underlying category's exit code.  Given identical inputs and seed, two runs
produce byte-identical outputs.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    FormatError,
    InvalidInputError,
    MissingFileError,
    PedreconError,
    PipelineStageError,
)
from .evaluation import EvaluationSummary, evaluate_frames
from .geometry import (
    RigidPose,
    Trajectory,
    gps_to_trajectory,
    integrate_odometry,
    triangulate_skeleton,
)
from .io import formats
from .io.bundle import write_scene_bundle
from .io.reports import save_report
from .pointcloud import VoxelGrid, aggregate_clouds, backproject_frame, voxelize
from .semantics import human_mask
from .skeleton.correct import correct_pose
from .skeleton.library import ReferenceLibrary, default_library
from .synth.scene import generate_scene, scene_config_from_dict


def _frame_index(path: Path) -> int:
    match = re.search(r"(\d+)$", path.stem)
    if match is None:
        raise FormatError(f"{path}: raster name must end in a frame number")
    return int(match.group(1))


def trajectory_stage(
    source: str,
    input_path,
    initial: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0),
    out_path=None,
) -> Trajectory:
    """Estimate the rig trajectory from an odometry or GPS sample file."""
    if source == "odometry":
        samples = formats.load_odometry(input_path)
        x, y, z, heading = initial
        trajectory = integrate_odometry(samples, RigidPose.from_heading(heading, (x, y, z)))
    elif source == "gps":
        samples = formats.load_gps(input_path)
        if not samples:
            raise FormatError(f"{input_path}: no gps samples")
        trajectory = gps_to_trajectory(samples, samples[0])
    else:
        raise InvalidInputError(f"unknown trajectory source {source!r}")
    if out_path is not None:
        formats.save_trajectory(trajectory, out_path)
    return trajectory


def _frame_files(disparity_dir, segmentation_dir) -> list[tuple[int, Path, Path]]:
    disparity_files = formats.list_frame_rasters(disparity_dir)
    segmentation_files = formats.list_frame_rasters(segmentation_dir)
    if len(disparity_files) != len(segmentation_files):
        raise DimensionMismatchError(
            f"{len(disparity_files)} disparity frames vs "
            f"{len(segmentation_files)} segmentation frames"
        )
    return [(_frame_index(d), d, s) for d, s in zip(disparity_files, segmentation_files)]


def reconstruct_stage(
    calibration_path,
    disparity_dir,
    segmentation_dir,
    trajectory: Trajectory,
    resolution: float = 0.25,
    stride: int = 1,
    drop_dynamic: bool = True,
    exclude_dynamic: bool = False,
    out_path=None,
    cloud_path=None,
) -> VoxelGrid:
    """Backproject every frame and fuse the points into a voxel map."""
    camera = formats.load_calibration(calibration_path)
    frames = _frame_files(disparity_dir, segmentation_dir)
    if len(frames) != len(trajectory):
        raise DimensionMismatchError(
            f"{len(frames)} frames vs {len(trajectory)} trajectory poses"
        )
    size = (camera.width, camera.height)
    clouds = []
    for index, disparity_file, segmentation_file in frames:
        if index >= len(trajectory):
            raise DimensionMismatchError(f"frame {index} outside the trajectory")
        clouds.append(backproject_frame(
            formats.load_disparity(disparity_file, expect_size=size),
            formats.load_segmentation(segmentation_file, expect_size=size),
            camera,
            trajectory.poses[index],
            stride=stride,
            exclude_dynamic=exclude_dynamic,
            frame_id=index,
        ))
    cloud = aggregate_clouds(clouds)
    grid = voxelize(cloud, resolution, drop_dynamic=drop_dynamic)
    if out_path is not None:
        formats.save_voxel_grid(grid, out_path)
    if cloud_path is not None:
        formats.save_pointcloud(cloud, cloud_path)
    return grid


def pose_stage(
    calibration_path,
    disparity_dir,
    joints_path,
    library: ReferenceLibrary | None = None,
    trajectory: Trajectory | None = None,
    anchor: str = "backbone",
    beta: float = 1.5,
    tau: float | None = None,
    scale_mode: str = "free",
    fixed_scale: float | None = None,
    window: int = 5,
    out_path=None,
) -> tuple[list[formats.PoseRecord], list[tuple[int, int, str]]]:
    """Triangulate every 2-D skeleton and correct it against the library.

    Without a trajectory the output stays in the camera frame (identity
    poses).  Skeletons that cannot be corrected (no usable disparity, too
    few joints) are skipped and reported, not fabricated.
    """
    camera = formats.load_calibration(calibration_path)
    grouped = formats.group_joints(formats.load_joints(joints_path))
    if library is None:
        library = default_library()
    records: list[formats.PoseRecord] = []
    skipped: list[tuple[int, int, str]] = []
    for frame_id in sorted(grouped):
        if trajectory is not None:
            if frame_id >= len(trajectory):
                raise DimensionMismatchError(
                    f"joints reference frame {frame_id} outside the trajectory"
                )
            pose = trajectory.poses[frame_id]
        else:
            pose = RigidPose.identity()
        dmap = formats.load_disparity(
            formats.frame_raster_path(disparity_dir, frame_id),
            expect_size=(camera.width, camera.height),
        )
        for person_id in sorted(grouped[frame_id]):
            try:
                observed = triangulate_skeleton(
                    grouped[frame_id][person_id], dmap, camera, pose, window=window
                )
                corrected = correct_pose(
                    observed, library,
                    anchor=anchor, beta=beta, tau=tau,
                    scale_mode=scale_mode, fixed_scale=fixed_scale,
                )
            except DegenerateInputError as exc:
                skipped.append((frame_id, person_id, str(exc)))
                continue
            records.extend(
                formats.skeleton_to_records(frame_id, person_id, corrected.skeleton)
            )
    if out_path is not None:
        formats.save_poses(records, out_path)
    return records, skipped


def evaluate_stage(
    gt_boxes_path,
    est_boxes_path,
    segmentation_dir=None,
    joints_path=None,
    iou_threshold: float = 0.5,
    crossover_threshold: float = 0.5,
    min_w: float = 7.0,
    min_h: float = 25.0,
    include_adjacent_bikes: bool = False,
    out_path=None,
) -> EvaluationSummary:
    """Full evaluation report for detection files plus optional pose inputs."""
    gt = formats.group_detections(formats.load_detections(gt_boxes_path))
    est = formats.group_detections(formats.load_detections(est_boxes_path))
    masks = {}
    if segmentation_dir is not None:
        for segmentation_file in formats.list_frame_rasters(segmentation_dir):
            masks[_frame_index(segmentation_file)] = human_mask(
                formats.load_segmentation(segmentation_file),
                include_adjacent_bikes=include_adjacent_bikes,
            )
    skeletons = {}
    if joints_path is not None:
        skeletons = formats.group_joints(formats.load_joints(joints_path))
    summary = evaluate_frames(
        gt, est, masks, skeletons,
        iou_threshold=iou_threshold,
        crossover_threshold=crossover_threshold,
        min_w=min_w,
        min_h=min_h,
    )
    if out_path is not None:
        save_report(summary, out_path, params={
            "iou": iou_threshold, "crossover": crossover_threshold,
            "min_w": min_w, "min_h": min_h,
        })
    return summary


def load_pipeline_config(path) -> tuple[dict, Path]:
    """Read a JSON pipeline config; returns (config, base directory)."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"{path}: no such file")
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(config, dict):
        raise FormatError(f"{path}: pipeline config must be a JSON object")
    return config, path.parent


def run_pipeline(config: dict, base_dir) -> dict[str, Path]:
    """Execute the configured stages; returns the artifact paths written."""
    base_dir = Path(base_dir)
    out_dir = base_dir / config.get("out_dir", "out")
    inputs = {
        key: (Path(value) if Path(value).is_absolute() else base_dir / value)
        for key, value in config.get("inputs", {}).items()
    }
    artifacts: dict[str, Path] = {}

    def stage(name, fn):
        try:
            return fn()
        except PedreconError as exc:
            raise PipelineStageError(name, exc) from exc

    def require(key: str, stage_name: str) -> Path:
        if key not in inputs:
            raise PipelineStageError(
                stage_name, MissingFileError(f"stage needs input {key!r} (not configured)")
            )
        return inputs[key]

    camera_height = 0.0
    if "synth" in config:
        def run_synth():
            scene_dict = dict(config["synth"])
            if "seed" in config:
                scene_dict["seed"] = config["seed"]
            scene = scene_config_from_dict(scene_dict)
            bundle = generate_scene(scene)
            paths = write_scene_bundle(
                bundle, out_dir / "input",
                joint_exact_disparity=bool(config.get("joint_exact_disparity", False)),
            )
            return scene, paths
        scene_config, bundle_paths = stage("synth", run_synth)
        camera_height = scene_config.camera_height
        for key, name in (
            ("calibration", "calibration"), ("disparity_dir", "disparity_dir"),
            ("segmentation_dir", "segmentation_dir"), ("odometry", "odometry"),
            ("gps", "gps"), ("gt_boxes", "gt_boxes"), ("joints", "gt_joints"),
            ("est_boxes", "est_boxes"),
        ):
            if name in bundle_paths:
                inputs.setdefault(key, bundle_paths[name])

    trajectory: Trajectory | None = None
    if "trajectory" in config:
        cfg = config["trajectory"]
        source = cfg.get("source", "odometry")
        trajectory = stage("trajectory", lambda: trajectory_stage(
            source,
            require("gps" if source == "gps" else "odometry", "trajectory"),
            tuple(cfg.get("initial", [0.0, 0.0, camera_height, 0.0])),
            out_path=out_dir / "trajectory.txt",
        ))
        artifacts["trajectory"] = out_dir / "trajectory.txt"
    elif "trajectory" in inputs:
        trajectory = stage("trajectory", lambda: formats.load_trajectory(inputs["trajectory"]))

    if "reconstruct" in config:
        cfg = config["reconstruct"]
        if trajectory is None:
            raise PipelineStageError(
                "reconstruct", InvalidInputError("stage requires a trajectory")
            )
        traj = trajectory
        stage("reconstruct", lambda: reconstruct_stage(
            require("calibration", "reconstruct"),
            require("disparity_dir", "reconstruct"),
            require("segmentation_dir", "reconstruct"),
            traj,
            resolution=float(cfg.get("resolution", 0.25)),
            stride=int(cfg.get("stride", 1)),
            drop_dynamic=bool(cfg.get("drop_dynamic", True)),
            exclude_dynamic=bool(cfg.get("exclude_dynamic", False)),
            out_path=out_dir / "voxels.txt",
            cloud_path=(out_dir / "cloud.txt") if cfg.get("save_cloud") else None,
        ))
        artifacts["voxels"] = out_dir / "voxels.txt"
        if cfg.get("save_cloud"):
            artifacts["cloud"] = out_dir / "cloud.txt"

    if "pose" in config:
        cfg = config["pose"]
        library = None
        if "library" in inputs:
            library = stage("pose", lambda: formats.load_library(inputs["library"]))
        traj = trajectory
        _, skipped = stage("pose", lambda: pose_stage(
            require("calibration", "pose"),
            require("disparity_dir", "pose"),
            require("joints", "pose"),
            library=library,
            trajectory=traj,
            anchor=cfg.get("anchor", "backbone"),
            beta=float(cfg.get("beta", 1.5)),
            tau=cfg.get("tau"),
            scale_mode=cfg.get("scale_mode", "free"),
            fixed_scale=cfg.get("fixed_scale"),
            window=int(cfg.get("window", 5)),
            out_path=out_dir / "poses.txt",
        ))
        artifacts["poses"] = out_dir / "poses.txt"
        if skipped:
            lines = ["# frame person reason"] + [f"{f} {p} {r}" for f, p, r in skipped]
            skip_path = out_dir / "pose_skips.txt"
            skip_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            artifacts["pose_skips"] = skip_path

    if "evaluate" in config:
        cfg = config["evaluate"]
        gt_path = require("gt_boxes", "evaluate")
        est_path = inputs.get("est_boxes", gt_path)
        stage("evaluate", lambda: evaluate_stage(
            gt_path,
            est_path,
            segmentation_dir=inputs.get("segmentation_dir"),
            joints_path=inputs.get("joints"),
            iou_threshold=float(cfg.get("iou", 0.5)),
            crossover_threshold=float(cfg.get("crossover", 0.5)),
            min_w=float(cfg.get("min_w", 7.0)),
            min_h=float(cfg.get("min_h", 25.0)),
            include_adjacent_bikes=bool(cfg.get("include_adjacent_bikes", False)),
            out_path=out_dir / "report.txt",
        ))
        artifacts["report"] = out_dir / "report.txt"

    return artifacts
