"""Stereo pedestrian-scene reconstruction and evaluation toolkit.

Builds vehicle trajectories from odometry or GPS, backprojects disparity
frames into semantically labeled voxel maps, triangulates and corrects
articulated 3-D pedestrian skeletons against a plausible-pose library, and
evaluates detections and 2-D poses — all validated against a built-in
synthetic-scene oracle with analytically known ground truth.
"""

__version__ = "0.1.0"

from .disparity import DisparityMap
from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    FormatError,
    InvalidDisparityError,
    InvalidInputError,
    MissingFileError,
    PedreconError,
    PipelineStageError,
)
from .geometry import (
    CameraIntrinsics,
    GpsSample,
    OdometrySample,
    RigidPose,
    Trajectory,
    disparity_to_point,
    gps_to_trajectory,
    integrate_odometry,
    project_point,
    sample_joint_disparity,
    triangulate_skeleton,
)
from .metrics import (
    BBox,
    MatchReport,
    crossover,
    enlarge_bbox,
    filter_min_size,
    iou,
    match_boxes,
    mpjds,
    mpjds_normalized,
    per_joint_report,
)
from .pointcloud import (
    Box3D,
    LabeledPointCloud,
    VoxelGrid,
    aggregate_clouds,
    backproject_frame,
    car_boxes_3d,
    voxelize,
)
from .semantics import DYNAMIC_CLASSES, SemanticClass, human_mask
from .skeleton import (
    Alignment,
    CorrectedPose,
    ReferenceLibrary,
    Skeleton2D,
    Skeleton3D,
    build_reference_library,
    correct_pose,
    default_library,
    limb_lengths,
    procrustes,
    threshold_limbs,
    truncated_nn,
)
from .synth import (
    PedestrianConfig,
    SceneBundle,
    SceneConfig,
    exact_joint_disparity,
    generate_scene,
    perturb_gps,
    render_frame,
)
