"""Three-point pose (P3P) via the classical resection quartic.

With distances a = |p2 p3|, b = |p1 p3|, c = |p1 p2| and the cosines of the
angles between the three viewing rays, the ratios of the camera-to-point
distances satisfy a degree-4 polynomial. Each admissible real root yields the
three point depths, and a rigid alignment of the object points onto the
reconstructed camera-frame points gives one candidate pose (up to four).
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import CollinearPointsError, NoSolutionError
from ..geometry import CameraIntrinsics, Pose, rotmat_to_quat
from .quartic import quartic_roots
from .registration import umeyama_registration


def _bearing_vectors(points2d: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    rays = np.column_stack([
        (points2d[:, 0] - intrinsics.cx) / intrinsics.fx,
        (points2d[:, 1] - intrinsics.cy) / intrinsics.fy,
        np.ones(points2d.shape[0]),
    ])
    return rays / np.linalg.norm(rays, axis=1, keepdims=True)


def p3p(points3d, points2d, intrinsics: CameraIntrinsics) -> list[Pose]:
    """Candidate poses (up to 4) for three 3D-to-2D correspondences.

    Raises CollinearPointsError for collinear 3D points and NoSolutionError
    when the quartic admits no usable real root (degenerate viewing geometry).
    """
    pts = np.asarray(points3d, dtype=float)
    uv = np.asarray(points2d, dtype=float)
    if pts.shape != (3, 3) or uv.shape != (3, 2):
        raise ValueError("expected exactly 3 points and 3 pixel coordinates")

    cross = np.cross(pts[1] - pts[0], pts[2] - pts[0])
    scale = max(np.linalg.norm(pts[1] - pts[0]), np.linalg.norm(pts[2] - pts[0]))
    if np.linalg.norm(cross) < 1e-12 * max(scale * scale, 1e-30):
        raise CollinearPointsError("the three 3D points are collinear")

    j1, j2, j3 = _bearing_vectors(uv, intrinsics)
    a2 = float(np.sum((pts[1] - pts[2]) ** 2))
    b2 = float(np.sum((pts[0] - pts[2]) ** 2))
    c2 = float(np.sum((pts[0] - pts[1]) ** 2))
    cos_a = float(j2 @ j3)
    cos_b = float(j1 @ j3)
    cos_g = float(j1 @ j2)

    ac = (a2 - c2) / b2
    apc = (a2 + c2) / b2
    bc = (b2 - c2) / b2
    ba = (b2 - a2) / b2

    q4 = (ac - 1.0) ** 2 - 4.0 * (c2 / b2) * cos_a ** 2
    q3 = 4.0 * (ac * (1.0 - ac) * cos_b
                - (1.0 - apc) * cos_a * cos_g
                + 2.0 * (c2 / b2) * cos_a ** 2 * cos_b)
    q2 = 2.0 * (ac ** 2 - 1.0
                + 2.0 * ac ** 2 * cos_b ** 2
                + 2.0 * bc * cos_a ** 2
                - 4.0 * apc * cos_a * cos_b * cos_g
                + 2.0 * ba * cos_g ** 2)
    q1 = 4.0 * (-ac * (1.0 + ac) * cos_b
                + 2.0 * (a2 / b2) * cos_g ** 2 * cos_b
                - (1.0 - apc) * cos_a * cos_g)
    q0 = (1.0 + ac) ** 2 - 4.0 * (a2 / b2) * cos_g ** 2

    if abs(q4) <= 1e-12:
        raise NoSolutionError("resection quartic degenerates (leading coefficient ~ 0)")
    roots = quartic_roots(q4, q3, q2, q1, q0)

    candidates: list[Pose] = []
    for v in roots.real_roots:
        if v <= 0.0:
            continue
        denom = 2.0 * (cos_g - v * cos_a)
        if abs(denom) < 1e-12:
            continue
        u = ((-1.0 + ac) * v * v - 2.0 * ac * cos_b * v + 1.0 + ac) / denom
        if u <= 0.0:
            continue
        s1_sq = c2 / (1.0 + u * u - 2.0 * u * cos_g)
        if s1_sq <= 0.0:
            continue
        s1 = math.sqrt(s1_sq)
        cam = np.stack([s1 * j1, u * s1 * j2, v * s1 * j3])
        rot, t, _ = umeyama_registration(pts, cam, with_scale=False)
        candidates.append(Pose(rotmat_to_quat(rot), tuple(t)))

    if not candidates:
        raise NoSolutionError("no admissible real root of the resection quartic")
    return candidates
