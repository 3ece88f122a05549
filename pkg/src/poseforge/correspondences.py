"""Synthetic correspondence-cluster generation, augmentation, and scene files.

Scenes use a virtual 640x480 calibrated camera. The target object (a unit
sphere by default) is posed randomly, its silhouette rasterized on an 8 px
grid, and each sampled grid cell yields one 4D correspondence (x, y, dx, dy)
per keypoint: cell center plus offset to that keypoint's projection. Noise and
outliers are injected on the offsets; vector mode normalizes them to unit
directions afterwards.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyMaskError, SceneFormatError
from .geometry import CameraIntrinsics, ObjectModel, Pose, Quaternion, project_points

IMAGE_WIDTH = 640
IMAGE_HEIGHT = 480
DEFAULT_GRID_STRIDE = 8
DEFAULT_M = 200

TRANSLATION_LOW = (-2.0, -2.0, 4.0)
TRANSLATION_HIGH = (2.0, 2.0, 8.0)

SCENE_FORMAT = "pose-forge-scenes"
SCENE_VERSION = 1

_MASK64 = (1 << 64) - 1


def scene_seed(global_seed: int, scene_id: int) -> int:
    """Per-scene seed via splitmix64-style mixing; order-independent and stable."""
    z = (global_seed * 0x9E3779B97F4A7C15 + scene_id + 1) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def default_intrinsics() -> CameraIntrinsics:
    """Virtual calibrated camera: focal length 800, principal point at center."""
    return CameraIntrinsics(800.0, 800.0, IMAGE_WIDTH / 2.0, IMAGE_HEIGHT / 2.0)


@dataclass(frozen=True)
class Correspondence:
    """One 4D correspondence: grid-cell center plus offset (or unit direction)."""

    x: float
    y: float
    dx: float
    dy: float

    @property
    def point(self) -> tuple[float, float]:
        """Implied 2D location x + dx, y + dy (point mode)."""
        return (self.x + self.dx, self.y + self.dy)


class CorrespondenceCluster:
    """All m candidate correspondences for one 3D keypoint.

    Members are stored as a read-only (m, 4) array of rows (x, y, dx, dy);
    within-cluster order carries no information.
    """

    __slots__ = ("keypoint_index", "members")

    def __init__(self, keypoint_index: int, members):
        arr = np.ascontiguousarray(np.asarray(members, dtype=float))
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError("members must be an (m, 4) array")
        arr.flags.writeable = False
        self.keypoint_index = int(keypoint_index)
        self.members = arr

    @property
    def m(self) -> int:
        return self.members.shape[0]

    def correspondence(self, k: int) -> Correspondence:
        return Correspondence(*self.members[k])

    def __eq__(self, other) -> bool:
        return (isinstance(other, CorrespondenceCluster)
                and self.keypoint_index == other.keypoint_index
                and np.array_equal(self.members, other.members))

    def __repr__(self) -> str:
        return f"CorrespondenceCluster(keypoint_index={self.keypoint_index}, m={self.m})"


@dataclass(frozen=True)
class SceneSample:
    """One synthetic scene: ground-truth pose plus n ordered clusters."""

    scene_id: int
    mode: str
    intrinsics: CameraIntrinsics
    truth: Pose
    clusters: tuple
    noise_sigma: float
    outlier_rate: float
    seed: int

    def __post_init__(self):
        if self.mode not in ("point", "vector"):
            raise ValueError(f"unknown mode {self.mode!r}")
        clusters = tuple(self.clusters)
        for i, cluster in enumerate(clusters):
            if cluster.keypoint_index != i:
                raise ValueError("clusters must be ordered by keypoint index")
        object.__setattr__(self, "clusters", clusters)

    @property
    def n(self) -> int:
        return len(self.clusters)

    @property
    def m(self) -> int:
        return self.clusters[0].m

    def cluster_array(self) -> np.ndarray:
        """(n, m, 4) view of all correspondences."""
        return np.stack([c.members for c in self.clusters])

    def __eq__(self, other) -> bool:
        return (isinstance(other, SceneSample)
                and self.scene_id == other.scene_id
                and self.mode == other.mode
                and self.intrinsics == other.intrinsics
                and self.truth == other.truth
                and self.noise_sigma == other.noise_sigma
                and self.outlier_rate == other.outlier_rate
                and self.seed == other.seed
                and len(self.clusters) == len(other.clusters)
                and all(a == b for a, b in zip(self.clusters, other.clusters)))


def _sample_pose_from_rng(rng: np.random.Generator) -> Pose:
    q = rng.standard_normal(4)
    t = tuple(rng.uniform(lo, hi) for lo, hi in zip(TRANSLATION_LOW, TRANSLATION_HIGH))
    return Pose(Quaternion(*q), t)


def sample_pose(rng_seed) -> Pose:
    """Random pose: rotation uniform on SO(3), translation uniform in
    [-2,2] x [-2,2] x [4,8] (camera frame)."""
    if isinstance(rng_seed, np.random.Generator):
        return _sample_pose_from_rng(rng_seed)
    return _sample_pose_from_rng(np.random.default_rng(rng_seed))


def _grid_centers(stride: float, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    nx = int(width // stride)
    ny = int(height // stride)
    xs = (np.arange(nx) + 0.5) * stride
    ys = (np.arange(ny) + 0.5) * stride
    return xs, ys


def mask_cells(pose: Pose, intrinsics: CameraIntrinsics, model: ObjectModel,
               grid_stride: float = DEFAULT_GRID_STRIDE,
               image_size: tuple[int, int] = (IMAGE_WIDTH, IMAGE_HEIGHT)) -> np.ndarray:
    """Centers of grid cells inside the projected silhouette of the bounding sphere.

    A cell center is inside when the camera ray through it intersects the
    sphere of radius diameter/2 centered at the posed object origin. Returns a
    (k, 2) array in raster order; raises EmptyMaskError when k == 0.
    """
    xs, ys = _grid_centers(grid_stride, *image_size)
    gx, gy = np.meshgrid(xs, ys)
    centers = np.column_stack([gx.ravel(), gy.ravel()])

    dirs = np.column_stack([
        (centers[:, 0] - intrinsics.cx) / intrinsics.fx,
        (centers[:, 1] - intrinsics.cy) / intrinsics.fy,
        np.ones(len(centers)),
    ])
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    sphere_center = pose.t
    radius = model.diameter / 2.0
    along = dirs @ sphere_center
    inside = (along > 0) & (along ** 2 >= sphere_center @ sphere_center - radius ** 2)
    cells = centers[inside]
    if cells.shape[0] == 0:
        raise EmptyMaskError("no grid-cell center falls inside the object silhouette")
    return cells


def _vectorize_offsets(offsets: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(offsets, axis=-1, keepdims=True)
    safe = np.where(norms < 1e-12, 1.0, norms)
    out = offsets / safe
    # a degenerate zero offset becomes the fixed direction (1, 0)
    zero = (norms < 1e-12)[..., 0]
    if np.any(zero):
        out[zero] = (1.0, 0.0)
    return out


def generate_scene(scene_id: int, seed: int, mode: str, model: ObjectModel,
                   intrinsics: CameraIntrinsics, m: int = DEFAULT_M,
                   noise_sigma: float = 0.0, outlier_rate: float = 0.0,
                   grid_stride: float = DEFAULT_GRID_STRIDE) -> SceneSample:
    """Generate one scene deterministically from its seed.

    The RNG draw layout is fixed and independent of noise_sigma/outlier_rate,
    so regenerating the same seed with different noise settings keeps the pose,
    the sampled cells, and even the underlying noise draws identical.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 <= outlier_rate <= 1.0:
        raise ValueError("outlier_rate must be within [0, 1]")
    if mode not in ("point", "vector"):
        raise ValueError(f"unknown mode {mode!r}")

    rng = np.random.default_rng(seed)
    pose = _sample_pose_from_rng(rng)
    cells_all = mask_cells(pose, intrinsics, model, grid_stride)
    cells = cells_all[rng.integers(0, len(cells_all), size=m)]

    n = model.n_keypoints
    proj = project_points(pose, intrinsics, model.keypoints)
    offsets = proj[:, None, :] - cells[None, :, :]

    noise = rng.standard_normal((n, m, 2))
    offsets = offsets + noise_sigma * noise

    # epsilon guards IEEE round-down, e.g. 0.3 * 200 = 59.999...
    n_outliers = int(np.floor(outlier_rate * m + 1e-9))
    order = np.stack([rng.permutation(m) for _ in range(n)])
    targets = rng.uniform(size=(n, m, 2)) * (IMAGE_WIDTH, IMAGE_HEIGHT)
    if n_outliers > 0:
        for i in range(n):
            sel = order[i, :n_outliers]
            offsets[i, sel] = targets[i, sel] - cells[sel]

    if mode == "vector":
        offsets = _vectorize_offsets(offsets)

    clusters = tuple(
        CorrespondenceCluster(i, np.column_stack([cells, offsets[i]]))
        for i in range(n)
    )
    return SceneSample(scene_id=scene_id, mode=mode, intrinsics=intrinsics,
                       truth=pose, clusters=clusters, noise_sigma=float(noise_sigma),
                       outlier_rate=float(outlier_rate), seed=int(seed))


def generate_dataset(count: int, global_seed: int, mode: str, model: ObjectModel,
                     intrinsics: CameraIntrinsics, m: int = DEFAULT_M,
                     noise_sigma: float = 0.0, outlier_rate: float = 0.0,
                     start_id: int = 0) -> list[SceneSample]:
    """Generate `count` scenes with per-scene seeds mixed from the global seed."""
    return [
        generate_scene(start_id + i, scene_seed(global_seed, start_id + i), mode,
                       model, intrinsics, m, noise_sigma, outlier_rate)
        for i in range(count)
    ]


@dataclass(frozen=True)
class PackedScenes:
    """Array-packed noiseless point-mode scenes, the unit of training data.

    cells: (S, m, 2) sampled grid-cell centers; projections: (S, n, 2) exact
    keypoint projections; rotations/translations: ground truth per scene.
    """

    cells: np.ndarray
    projections: np.ndarray
    rotations: np.ndarray
    translations: np.ndarray

    @property
    def count(self) -> int:
        return self.cells.shape[0]

    @property
    def n(self) -> int:
        return self.projections.shape[1]

    @property
    def m(self) -> int:
        return self.cells.shape[1]


def pack_scenes(scenes: Sequence[SceneSample], model: ObjectModel) -> PackedScenes:
    """Pack noiseless point-mode base scenes for fast online augmentation.

    Keypoint projections are recomputed from the stored truth pose so that
    augmented offsets stay bit-identical to the generator's (deriving them as
    cell + offset would be off by an ulp).
    """
    if len(scenes) == 0:
        raise ValueError("no scenes to pack")
    cells = []
    projections = []
    rotations = []
    translations = []
    for s in scenes:
        if s.mode != "point" or s.noise_sigma != 0.0 or s.outlier_rate != 0.0:
            raise ValueError(
                "online augmentation needs noiseless point-mode base scenes "
                f"(scene {s.scene_id} has mode={s.mode}, sigma={s.noise_sigma}, "
                f"outliers={s.outlier_rate})")
        if s.n != model.n_keypoints:
            raise ValueError(f"scene {s.scene_id} has {s.n} clusters, "
                             f"model has {model.n_keypoints} keypoints")
        arr = s.cluster_array()
        cells.append(arr[0, :, :2])
        projections.append(project_points(s.truth, s.intrinsics, model.keypoints))
        rotations.append(s.truth.matrix)
        translations.append(s.truth.t)
    return PackedScenes(np.stack(cells), np.stack(projections),
                        np.stack(rotations), np.stack(translations))


def augment_batch(packed: PackedScenes, indices: np.ndarray, sigmas: np.ndarray,
                  rates: np.ndarray, mode: str, rng: np.random.Generator) -> np.ndarray:
    """Fresh noisy correspondences for a batch of base scenes.

    Applies per-scene Gaussian noise then replaces floor(rate * m) members per
    cluster with offsets toward uniform image locations, mirroring
    generate_scene. Returns raw (B, n, m, 4) correspondence rows.
    """
    cells = packed.cells[indices]                   # (B, m, 2)
    proj = packed.projections[indices]              # (B, n, 2)
    batch, m = cells.shape[0], cells.shape[1]
    n = proj.shape[1]

    offsets = proj[:, :, None, :] - cells[:, None, :, :]
    offsets = offsets + sigmas[:, None, None, None] * rng.standard_normal((batch, n, m, 2))

    counts = np.floor(rates * m + 1e-9).astype(int)
    keys = rng.random((batch, n, m))
    targets = rng.uniform(size=(batch, n, m, 2)) * (IMAGE_WIDTH, IMAGE_HEIGHT)
    if np.any(counts > 0):
        ranks = np.argsort(np.argsort(keys, axis=2), axis=2)
        outlier = ranks < counts[:, None, None]
        replacement = targets - cells[:, None, :, :]
        offsets = np.where(outlier[..., None], replacement, offsets)

    if mode == "vector":
        offsets = _vectorize_offsets(offsets)

    rows = np.empty((batch, n, m, 4))
    rows[..., :2] = cells[:, None, :, :]
    rows[..., 2:] = offsets
    return rows


def _scene_to_record(s: SceneSample) -> dict:
    return {
        "scene_id": s.scene_id,
        "seed": s.seed,
        "noise_sigma": s.noise_sigma,
        "outlier_rate": s.outlier_rate,
        "intrinsics": s.intrinsics.to_json(),
        "truth": s.truth.to_json(),
        "clusters": [c.members.tolist() for c in s.clusters],
    }


def _scene_from_record(obj: dict, mode: str, n: int, m: int, lineno: int) -> SceneSample:
    clusters = obj["clusters"]
    if len(clusters) != n:
        raise SceneFormatError(f"line {lineno}: expected {n} clusters, found {len(clusters)}")
    built = []
    for i, members in enumerate(clusters):
        arr = np.asarray(members, dtype=float)
        if arr.shape != (m, 4):
            raise SceneFormatError(f"line {lineno}: cluster {i} is not an ({m}, 4) array")
        built.append(CorrespondenceCluster(i, arr))
    return SceneSample(scene_id=int(obj["scene_id"]), mode=mode,
                       intrinsics=CameraIntrinsics.from_json(obj["intrinsics"]),
                       truth=Pose.from_json(obj["truth"]), clusters=tuple(built),
                       noise_sigma=float(obj["noise_sigma"]),
                       outlier_rate=float(obj["outlier_rate"]), seed=int(obj["seed"]))


def write_scenes(samples: Iterable[SceneSample], path, *, mode: str | None = None,
                 n: int | None = None, m: int | None = None) -> None:
    """Write scenes as JSON lines with a single header line.

    For an empty sample list the header falls back to (point, 8, 200) unless
    overridden through the keywords.
    """
    samples = list(samples)
    if samples:
        mode = samples[0].mode
        n = samples[0].n
        m = samples[0].m
        for s in samples:
            if s.mode != mode or s.n != n or s.m != m:
                raise ValueError("all scenes in one file must share mode, n, and m")
    else:
        mode = mode or "point"
        n = n if n is not None else 8
        m = m if m is not None else DEFAULT_M
    header = {"format": SCENE_FORMAT, "version": SCENE_VERSION,
              "mode": mode, "n": n, "m": m}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        for s in samples:
            fh.write(json.dumps(_scene_to_record(s)) + "\n")


def read_scenes(path) -> list[SceneSample]:
    """Read a scene file; raises SceneFormatError naming the offending line."""
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise SceneFormatError("line 1: missing header")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise SceneFormatError(f"line 1: malformed header ({exc.msg})") from exc
        if header.get("format") != SCENE_FORMAT:
            raise SceneFormatError(f"line 1: unknown format {header.get('format')!r}")
        if header.get("version") != SCENE_VERSION:
            raise SceneFormatError(
                f"line 1: unsupported version {header.get('version')!r} "
                f"(expected {SCENE_VERSION})")
        mode, n, m = header["mode"], header["n"], header["m"]
        scenes = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SceneFormatError(f"line {lineno}: malformed record ({exc.msg})") from exc
            try:
                scenes.append(_scene_from_record(obj, mode, n, m, lineno))
            except (KeyError, TypeError) as exc:
                raise SceneFormatError(f"line {lineno}: missing or invalid field ({exc})") from exc
    return scenes
