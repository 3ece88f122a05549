import numpy as np
import pytest

from poseforge.correspondences import default_intrinsics, sample_pose
from poseforge.errors import CollinearPointsError
from poseforge.geometry import (
    common_cube_keypoints,
    pose_error_ratio,
    project_points,
    unit_sphere_model,
)
from poseforge.pnp.p3p import p3p

MODEL = unit_sphere_model()
K = default_intrinsics()
CORNERS = common_cube_keypoints([1.0])


def best_candidate(candidates, truth):
    return min(pose_error_ratio(c, truth, MODEL) for c in candidates)


def test_true_pose_among_candidates_cube_corners():
    rng = np.random.default_rng(70)
    for _ in range(200):
        truth = sample_pose(rng)
        pts = CORNERS[[0, 3, 5]]
        uv = project_points(truth, K, pts)
        candidates = p3p(pts, uv, K)
        assert len(candidates) <= 4
        assert best_candidate(candidates, truth) < 1e-6


def test_candidates_reproject_inputs():
    rng = np.random.default_rng(71)
    for _ in range(100):
        truth = sample_pose(rng)
        pts = rng.uniform(-1, 1, (3, 3))
        if np.linalg.norm(np.cross(pts[1] - pts[0], pts[2] - pts[0])) < 1e-3:
            continue
        uv = project_points(truth, K, pts)
        for cand in p3p(pts, uv, K):
            reproj = project_points(cand, K, pts, strict=False)
            if np.all(np.isfinite(reproj)):
                assert np.max(np.linalg.norm(reproj - uv, axis=1)) < 1e-6


def test_collinear_points_rejected():
    pts = np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 0.5], [1.0, 1.0, 1.0]])
    with pytest.raises(CollinearPointsError):
        p3p(pts, np.zeros((3, 2)), K)


def test_soundness_over_many_random_scenes():
    # the true pose is always among the candidates for exact inputs
    rng = np.random.default_rng(72)
    corner_ids = np.arange(8)
    for _ in range(10_000):
        truth = sample_pose(rng)
        pts = CORNERS[rng.choice(corner_ids, 3, replace=False)]
        uv = project_points(truth, K, pts)
        candidates = p3p(pts, uv, K)
        assert best_candidate(candidates, truth) < 1e-6


def test_wrong_shapes_rejected():
    with pytest.raises(ValueError):
        p3p(CORNERS[:4], np.zeros((4, 2)), K)
