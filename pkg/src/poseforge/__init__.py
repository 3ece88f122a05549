"""6D object pose estimation from correspondence clusters.

Grouped-aggregation pose regressor trained end to end on synthetic 3D-to-2D
correspondences, plus classical RANSAC PnP baselines (EPnP, P3P, voting) and a
benchmark harness comparing them under controlled noise and outlier rates.
"""

from .geometry import (
    CameraIntrinsics,
    ObjectModel,
    Pose,
    Quaternion,
    add_metric,
    common_cube_keypoints,
    pose_error_ratio,
    project,
    quat_to_rotmat,
    reconstruction_error,
    rep_metric,
    rotmat_to_quat,
    unit_sphere_model,
)

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "ObjectModel",
    "Pose",
    "Quaternion",
    "add_metric",
    "common_cube_keypoints",
    "pose_error_ratio",
    "project",
    "quat_to_rotmat",
    "reconstruction_error",
    "rep_metric",
    "rotmat_to_quat",
    "unit_sphere_model",
    "__version__",
]
