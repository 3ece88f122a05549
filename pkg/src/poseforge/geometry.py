"""Core pose, camera, and metric math.

Conventions: quaternions are (w, x, y, z), canonicalized to w >= 0; poses map
object-frame points into the camera frame via R p + t; scene units are metres.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NotARotationError,
    PointBehindCameraError,
    ZeroNormQuaternionError,
)

MIN_DEPTH = 1e-9


def _canonical_quat(w: float, x: float, y: float, z: float) -> tuple[float, float, float, float]:
    """Normalize and pick the w >= 0 hemisphere (ties: first nonzero positive)."""
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    if norm < 1e-15:
        raise ZeroNormQuaternionError("quaternion has zero norm")
    if abs(norm - 1.0) > 1e-12:  # keep construction idempotent bit-for-bit
        w, x, y, z = w / norm, x / norm, y / norm, z / norm
    for c in (w, x, y, z):
        if c != 0.0:
            if c < 0.0:
                w, x, y, z = -w, -x, -y, -z
            break
    return w, x, y, z


@dataclass(frozen=True)
class Quaternion:
    """Unit quaternion; construction normalizes and canonicalizes the sign."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        w, x, y, z = _canonical_quat(self.w, self.x, self.y, self.z)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @property
    def components(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Pose:
    """Rigid camera pose: rotation (unit quaternion) plus translation in metres."""

    rotation: Quaternion
    translation: tuple[float, float, float]

    def __post_init__(self):
        t = tuple(float(v) for v in self.translation)
        if len(t) != 3:
            raise ValueError("translation must have 3 components")
        object.__setattr__(self, "translation", t)

    @property
    def matrix(self) -> np.ndarray:
        """3x3 rotation matrix of this pose."""
        return quat_to_rotmat(self.rotation)

    @property
    def t(self) -> np.ndarray:
        return np.array(self.translation, dtype=float)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(Quaternion.identity(), (0.0, 0.0, 0.0))

    @classmethod
    def from_matrix(cls, rotmat: np.ndarray, translation) -> "Pose":
        return cls(rotmat_to_quat(rotmat), tuple(float(v) for v in translation))

    def to_json(self) -> dict:
        return {"q": [self.rotation.w, self.rotation.x, self.rotation.y, self.rotation.z],
                "t": list(self.translation)}

    @classmethod
    def from_json(cls, obj: dict) -> "Pose":
        q = obj["q"]
        return cls(Quaternion(q[0], q[1], q[2], q[3]), tuple(obj["t"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "Pose":
        return cls.from_json(json.loads(text))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point, in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    def to_json(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}

    @classmethod
    def from_json(cls, obj: dict) -> "CameraIntrinsics":
        return cls(obj["fx"], obj["fy"], obj["cx"], obj["cy"])


@dataclass(frozen=True)
class ObjectModel:
    """Object geometry: ordered 3D keypoints, diameter, and surface points for metrics."""

    keypoints: np.ndarray
    diameter: float
    surface_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        kp = np.ascontiguousarray(np.asarray(self.keypoints, dtype=float))
        sp = np.ascontiguousarray(np.asarray(self.surface_points, dtype=float))
        if kp.ndim != 2 or kp.shape[1] != 3 or kp.shape[0] < 4:
            raise ValueError("keypoints must be an (n, 3) array with n >= 4")
        if not self.diameter > 0:
            raise ValueError("diameter must be positive")
        kp.flags.writeable = False
        sp.flags.writeable = False
        object.__setattr__(self, "keypoints", kp)
        object.__setattr__(self, "surface_points", sp)

    @property
    def n_keypoints(self) -> int:
        return self.keypoints.shape[0]


def quat_to_rotmat(q) -> np.ndarray:
    """Rotation matrix of a quaternion; the input is normalized internally.

    Accepts a Quaternion or any (w, x, y, z) sequence, including raw non-unit
    network outputs; differentiable through the normalization.
    """
    if isinstance(q, Quaternion):
        w, x, y, z = q.components
    else:
        w, x, y, z = (float(v) for v in q)
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    if norm < 1e-15:
        raise ZeroNormQuaternionError("quaternion has zero norm")
    w, x, y, z = w / norm, x / norm, y / norm, z / norm
    return np.array([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])


def rotmat_to_quat(rotmat: np.ndarray, tol: float = 1e-6) -> Quaternion:
    """Quaternion of a rotation matrix (Shepperd's method), canonical sign."""
    m = np.asarray(rotmat, dtype=float)
    if m.shape != (3, 3):
        raise NotARotationError("expected a 3x3 matrix")
    if np.max(np.abs(m.T @ m - np.eye(3))) > tol or abs(np.linalg.det(m) - 1.0) > tol:
        raise NotARotationError("matrix is not orthonormal with determinant +1")
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0.0:
        s = math.sqrt(trace + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    return Quaternion(w, x, y, z)


def transform_points(pose: Pose, points: np.ndarray) -> np.ndarray:
    """Apply R p + t to an (n, 3) array of points."""
    pts = np.asarray(points, dtype=float)
    return pts @ pose.matrix.T + pose.t


def project(pose: Pose, intrinsics: CameraIntrinsics, point) -> tuple[float, float]:
    """Project a single 3D object-frame point to pixel coordinates.

    Raises PointBehindCameraError when the transformed depth is <= 1e-9.
    """
    p = np.asarray(point, dtype=float)
    cam = pose.matrix @ p + pose.t
    if cam[2] <= MIN_DEPTH:
        raise PointBehindCameraError(f"point depth {cam[2]:.3g} is not positive")
    u = intrinsics.fx * cam[0] / cam[2] + intrinsics.cx
    v = intrinsics.fy * cam[1] / cam[2] + intrinsics.cy
    return (float(u), float(v))


def project_points(pose: Pose, intrinsics: CameraIntrinsics, points: np.ndarray,
                   strict: bool = True) -> np.ndarray:
    """Project an (n, 3) array of points to (n, 2) pixels.

    With strict=True, any non-positive depth raises PointBehindCameraError;
    with strict=False those rows come back as +inf (useful for scoring loops).
    """
    cam = transform_points(pose, points)
    z = cam[:, 2]
    behind = z <= MIN_DEPTH
    if strict and np.any(behind):
        raise PointBehindCameraError("one or more points project behind the camera")
    with np.errstate(divide="ignore", invalid="ignore"):
        uv = np.empty((cam.shape[0], 2))
        uv[:, 0] = intrinsics.fx * cam[:, 0] / z + intrinsics.cx
        uv[:, 1] = intrinsics.fy * cam[:, 1] / z + intrinsics.cy
    if not strict:
        uv[behind] = np.inf
    return uv


def reconstruction_error(estimated: Pose, truth: Pose, keypoints) -> float:
    """Mean 3D distance between keypoints transformed by the two poses."""
    pts = np.asarray(keypoints, dtype=float)
    if pts.size == 0:
        raise ValueError("keypoints must be nonempty")
    d = transform_points(estimated, pts) - transform_points(truth, pts)
    return float(np.mean(np.linalg.norm(d, axis=1)))


def pose_error_ratio(estimated: Pose, truth: Pose, model: ObjectModel) -> float:
    """Reconstruction error over the model keypoints, divided by the diameter."""
    return reconstruction_error(estimated, truth, model.keypoints) / model.diameter


def add_metric(estimated: Pose, truth: Pose, model: ObjectModel) -> float:
    """Mean 3D distance over the model surface points (ADD)."""
    if model.surface_points.size == 0:
        raise ValueError("model has no surface points")
    d = transform_points(estimated, model.surface_points) - transform_points(truth, model.surface_points)
    return float(np.mean(np.linalg.norm(d, axis=1)))


def add_correct(estimated: Pose, truth: Pose, model: ObjectModel) -> bool:
    """ADD-0.1d test: pose correct when ADD < 10% of the model diameter."""
    return add_metric(estimated, truth, model) < 0.1 * model.diameter


def rep_metric(estimated: Pose, truth: Pose, intrinsics: CameraIntrinsics,
               model: ObjectModel) -> float:
    """Mean 2D reprojection distance over the model surface points (REP)."""
    if model.surface_points.size == 0:
        raise ValueError("model has no surface points")
    a = project_points(estimated, intrinsics, model.surface_points)
    b = project_points(truth, intrinsics, model.surface_points)
    return float(np.mean(np.linalg.norm(a - b, axis=1)))


def rep_correct(estimated: Pose, truth: Pose, intrinsics: CameraIntrinsics,
                model: ObjectModel) -> bool:
    """REP-5px test: pose correct when REP < 5 pixels."""
    return rep_metric(estimated, truth, intrinsics, model) < 5.0


def common_cube_keypoints(radii) -> np.ndarray:
    """Corners of the largest axis-aligned cube inscribed in the mean-radius sphere.

    Corner order is fixed lexicographically by sign pattern:
    ---, --+, -+-, -++, +--, +-+, ++-, +++.
    """
    radii = list(radii)
    if len(radii) == 0:
        raise ValueError("radii must be nonempty")
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    half_edge = (sum(radii) / len(radii)) / math.sqrt(3.0)
    corners = [(sx * half_edge, sy * half_edge, sz * half_edge)
               for sx, sy, sz in itertools.product((-1.0, 1.0), repeat=3)]
    return np.array(corners)


def fibonacci_sphere(count: int, radius: float = 1.0) -> np.ndarray:
    """Deterministic near-uniform lattice of `count` points on a sphere."""
    k = np.arange(count, dtype=float)
    z = 1.0 - 2.0 * (k + 0.5) / count
    phi = k * math.pi * (3.0 - math.sqrt(5.0))
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return radius * np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def unit_sphere_model(n_surface: int = 512) -> ObjectModel:
    """The synthetic target: unit sphere with inscribed-cube keypoints.

    Keypoints are the common-cube corners for radius 1, diameter 2, and the
    surface points a 512-point Fibonacci lattice (deterministic stand-in for
    mesh vertices when computing ADD/REP).
    """
    return ObjectModel(keypoints=common_cube_keypoints([1.0]),
                       diameter=2.0,
                       surface_points=fibonacci_sphere(n_surface))
