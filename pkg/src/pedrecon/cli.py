"""Command-line interface.

Subcommands map one-to-one onto the pipeline stages:

  trajectory   dead-reckon odometry or project GPS fixes into a trajectory
  reconstruct  backproject frames into a labeled voxel map
  pose         triangulate 2-D joints and correct implausible skeletons
  evaluate     detection/pose metrics report
  synth        generate a synthetic scene bundle
  pipeline     run the stages described by a JSON config

Exit codes are stable per error category (see errors.py); 0 means success.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import FormatError, MissingFileError, PedreconError
from .io import formats
from .io.bundle import write_scene_bundle
from .pipeline import (
    evaluate_stage,
    load_pipeline_config,
    pose_stage,
    reconstruct_stage,
    run_pipeline,
    trajectory_stage,
)
from .synth.scene import generate_scene, scene_config_from_dict


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pedrecon",
        description="Stereo pedestrian-scene reconstruction and evaluation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"pedrecon {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectory", help="estimate the vehicle trajectory")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--odometry", help="odometry sample file (timestamp speed yaw_rate)")
    source.add_argument("--gps", help="gps sample file (timestamp latitude longitude)")
    p.add_argument("--initial", nargs=4, type=float, default=[0.0, 0.0, 0.0, 0.0],
                   metavar=("X", "Y", "Z", "HEADING"),
                   help="initial pose for odometry integration")
    p.add_argument("--out", required=True)

    p = sub.add_parser("reconstruct", help="labeled voxel map from disparity + segmentation")
    p.add_argument("--calib", required=True)
    p.add_argument("--disparity-dir", required=True)
    p.add_argument("--seg-dir", required=True)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--resolution", type=float, default=0.25)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--drop-dynamic", action="store_true")
    p.add_argument("--exclude-dynamic", action="store_true",
                   help="also drop dynamic pixels at backprojection")
    p.add_argument("--save-cloud", help="optionally write the aggregated pointcloud here")
    p.add_argument("--out", required=True)

    p = sub.add_parser("pose", help="triangulate and correct 3-D skeletons")
    p.add_argument("--calib", required=True)
    p.add_argument("--disparity-dir", required=True)
    p.add_argument("--joints", required=True)
    p.add_argument("--library", help="pose library file (default: built-in library)")
    p.add_argument("--trajectory", help="trajectory file (default: camera-frame output)")
    p.add_argument("--anchor", choices=["hip", "backbone"], default="backbone")
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--scale-mode",
                   choices=["free", "hip_ratio", "backbone_ratio", "fixed"],
                   default="free")
    p.add_argument("--fixed-scale", type=float,
                   help="scale value for --scale-mode fixed")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="detection and pose evaluation report")
    p.add_argument("--gt-boxes", required=True)
    p.add_argument("--est-boxes", required=True)
    p.add_argument("--masks", help="segmentation directory for joint-to-mask distances")
    p.add_argument("--joints", help="estimated 2-D joints file")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--crossover", type=float, default=0.5)
    p.add_argument("--min-w", type=float, default=7.0)
    p.add_argument("--min-h", type=float, default=25.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene bundle")
    p.add_argument("--config", required=True, help="scene config JSON")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--joint-exact-disparity", action="store_true",
                   help="stamp exact joint disparities into the rendered frames")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("pipeline", help="run the stages described by a JSON config")
    p.add_argument("--config", required=True)
    return parser


def _load_json(path: str) -> dict:
    file = Path(path)
    if not file.exists():
        raise MissingFileError(f"{file}: no such file")
    try:
        return json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{file}: invalid JSON ({exc})") from None


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    artifacts: dict[str, Path] = {}
    try:
        if args.command == "trajectory":
            trajectory_stage(
                "gps" if args.gps else "odometry",
                args.gps or args.odometry,
                tuple(args.initial),
                out_path=args.out,
            )
            artifacts["trajectory"] = Path(args.out)
        elif args.command == "reconstruct":
            trajectory = formats.load_trajectory(args.trajectory)
            reconstruct_stage(
                args.calib, args.disparity_dir, args.seg_dir, trajectory,
                resolution=args.resolution,
                stride=args.stride,
                drop_dynamic=args.drop_dynamic,
                exclude_dynamic=args.exclude_dynamic,
                out_path=args.out,
                cloud_path=args.save_cloud,
            )
            artifacts["voxels"] = Path(args.out)
            if args.save_cloud:
                artifacts["cloud"] = Path(args.save_cloud)
        elif args.command == "pose":
            library = formats.load_library(args.library) if args.library else None
            trajectory = formats.load_trajectory(args.trajectory) if args.trajectory else None
            _, skipped = pose_stage(
                args.calib, args.disparity_dir, args.joints,
                library=library,
                trajectory=trajectory,
                anchor=args.anchor,
                beta=args.beta,
                tau=args.tau,
                scale_mode=args.scale_mode,
                fixed_scale=args.fixed_scale,
                window=args.window,
                out_path=args.out,
            )
            artifacts["poses"] = Path(args.out)
            for frame_id, person_id, reason in skipped:
                print(f"skipped frame {frame_id} person {person_id}: {reason}", file=sys.stderr)
        elif args.command == "evaluate":
            evaluate_stage(
                args.gt_boxes, args.est_boxes,
                segmentation_dir=args.masks,
                joints_path=args.joints,
                iou_threshold=args.iou,
                crossover_threshold=args.crossover,
                min_w=args.min_w,
                min_h=args.min_h,
                out_path=args.out,
            )
            artifacts["report"] = Path(args.out)
        elif args.command == "synth":
            scene_dict = _load_json(args.config)
            if args.seed is not None:
                scene_dict["seed"] = args.seed
            bundle = generate_scene(scene_config_from_dict(scene_dict))
            artifacts = write_scene_bundle(
                bundle, args.out_dir, joint_exact_disparity=args.joint_exact_disparity
            )
        else:  # pipeline
            config, base_dir = load_pipeline_config(args.config)
            artifacts = run_pipeline(config, base_dir)
    except PedreconError as exc:
        print(f"pedrecon {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    for name in sorted(artifacts):
        print(f"{name}: {artifacts[name]}")
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
