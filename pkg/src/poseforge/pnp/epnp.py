"""EPnP: non-iterative Perspective-n-Point via 4 control points.

Expresses the 3D points in barycentric coordinates of 4 control points
(centroid + PCA axes), stacks the perspective constraints into a 2n x 12
system, recovers the control points in camera frame from the null space of
the 12 x 12 normal matrix (beta cases N = 1..3 with sign fix, then
Gauss-Newton on all four betas), and reads the pose off a closed-form rigid
alignment. The core is batched so a RANSAC loop can solve many minimal sets
at once; the public entry point is the batch-of-one special case.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateGeometryError
from ..geometry import CameraIntrinsics, Pose, rotmat_to_quat

_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_GN_ITERATIONS = 10


def _control_points(pts: np.ndarray):
    """Centroid + PCA control points per batch item; flags coplanar sets."""
    c0 = pts.mean(axis=1)
    centered = pts - c0[:, None, :]
    cov = centered.transpose(0, 2, 1) @ centered / pts.shape[1]
    eigval, eigvec = np.linalg.eigh(cov)  # ascending
    ok = eigval[:, 0] > 1e-9 * np.maximum(eigval[:, 2], 1e-30)
    axis = np.sqrt(np.maximum(eigval, 0.0))[:, None, :] * eigvec  # columns scaled
    ctrl = np.concatenate([c0[:, None, :], c0[:, None, :] + axis.transpose(0, 2, 1)],
                          axis=1)  # (B, 4, 3)
    return ctrl, ok


def _barycentric(pts: np.ndarray, ctrl: np.ndarray, ok: np.ndarray) -> np.ndarray:
    basis = (ctrl[:, 1:, :] - ctrl[:, :1, :]).transpose(0, 2, 1)  # (B, 3, 3) columns
    safe = np.where(ok[:, None, None], basis, np.eye(3))
    rhs = (pts - ctrl[:, :1, :]).transpose(0, 2, 1)
    beta = np.linalg.solve(safe, rhs).transpose(0, 2, 1)  # (B, n, 3)
    alpha0 = 1.0 - beta.sum(axis=2, keepdims=True)
    return np.concatenate([alpha0, beta], axis=2)  # (B, n, 4)


def _constraint_matrix(alpha: np.ndarray, uv: np.ndarray,
                       intr: CameraIntrinsics) -> np.ndarray:
    b, n = alpha.shape[0], alpha.shape[1]
    m = np.zeros((b, 2 * n, 12))
    du = intr.cx - uv[:, :, 0]
    dv = intr.cy - uv[:, :, 1]
    for j in range(4):
        a = alpha[:, :, j]
        m[:, 0::2, 3 * j + 0] = a * intr.fx
        m[:, 0::2, 3 * j + 2] = a * du
        m[:, 1::2, 3 * j + 1] = a * intr.fy
        m[:, 1::2, 3 * j + 2] = a * dv
    return m


def _beta_system(null_vecs: np.ndarray, ctrl: np.ndarray):
    """L (B, 6, 10) over beta products and rho (B, 6) of squared distances.

    Product order: b11, b12, b22, b13, b23, b33, b14, b24, b34, b44.
    """
    b = null_vecs.shape[0]
    v = null_vecs.transpose(0, 2, 1).reshape(b, 4, 4, 3)  # (B, vec, ctrl, xyz)
    dv = np.stack([v[:, :, i, :] - v[:, :, j, :] for i, j in _PAIRS], axis=2)
    # dv: (B, 4, 6, 3); dot(i, j) over xyz
    def dot(i, j):
        return np.einsum("bpc,bpc->bp", dv[:, i], dv[:, j])

    cols = [dot(0, 0), 2 * dot(0, 1), dot(1, 1), 2 * dot(0, 2), 2 * dot(1, 2),
            dot(2, 2), 2 * dot(0, 3), 2 * dot(1, 3), 2 * dot(2, 3), dot(3, 3)]
    l_mat = np.stack(cols, axis=2)
    diff = np.stack([ctrl[:, i, :] - ctrl[:, j, :] for i, j in _PAIRS], axis=1)
    rho = np.einsum("bpc,bpc->bp", diff, diff)
    return l_mat, rho


def _initial_betas(l_mat: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Three linearized beta estimates per batch item -> (B, 3, 4)."""
    b = l_mat.shape[0]
    betas = np.zeros((b, 3, 4))

    def solve(cols):
        a = l_mat[:, :, cols]
        return np.einsum("bij,bj->bi", np.linalg.pinv(a), rho)

    # case N=1: unknowns (b11, b12, b13, b14)
    x = solve([0, 1, 3, 6])
    b1 = np.sqrt(np.abs(x[:, 0]))
    sign = np.where(x[:, 0] < 0, -1.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rest = np.where(b1[:, None] > 0, sign[:, None] * x[:, 1:] / np.where(b1 == 0, 1, b1)[:, None], 0.0)
    betas[:, 0, 0] = b1
    betas[:, 0, 1:] = rest

    # case N=2: unknowns (b11, b12, b22)
    x = solve([0, 1, 2])
    neg = x[:, 0] < 0
    betas[:, 1, 0] = np.sqrt(np.abs(x[:, 0]))
    same_sign = np.where(neg, x[:, 2] < 0, x[:, 2] > 0)
    betas[:, 1, 1] = np.where(same_sign, np.sqrt(np.abs(x[:, 2])), 0.0)
    betas[:, 1, 0] *= np.where(x[:, 1] < 0, -1.0, 1.0)

    # case N=3: unknowns (b11, b12, b22, b13, b23)
    x = solve([0, 1, 2, 3, 4])
    neg = x[:, 0] < 0
    b1 = np.sqrt(np.abs(x[:, 0]))
    same_sign = np.where(neg, x[:, 2] < 0, x[:, 2] > 0)
    betas[:, 2, 0] = b1
    betas[:, 2, 1] = np.where(same_sign, np.sqrt(np.abs(x[:, 2])), 0.0)
    betas[:, 2, 0] *= np.where(x[:, 1] < 0, -1.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        betas[:, 2, 2] = np.where(b1 > 0, x[:, 3] / np.where(b1 == 0, 1, b1), 0.0)
    return betas


def _beta_products(betas: np.ndarray) -> np.ndarray:
    b1, b2, b3, b4 = betas[:, 0], betas[:, 1], betas[:, 2], betas[:, 3]
    return np.stack([b1 * b1, b1 * b2, b2 * b2, b1 * b3, b2 * b3, b3 * b3,
                     b1 * b4, b2 * b4, b3 * b4, b4 * b4], axis=1)


def _gauss_newton(l_mat: np.ndarray, rho: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """Refine betas on the control-point distance residuals (all four betas)."""
    z = np.zeros_like(betas[:, 0])
    for _ in range(_GN_ITERATIONS):
        b1, b2, b3, b4 = betas[:, 0], betas[:, 1], betas[:, 2], betas[:, 3]
        r = np.einsum("bij,bj->bi", l_mat, _beta_products(betas)) - rho
        dp = np.stack([
            np.stack([2 * b1, b2, z, b3, z, z, b4, z, z, z], axis=1),
            np.stack([z, b1, 2 * b2, z, b3, z, z, b4, z, z], axis=1),
            np.stack([z, z, z, b1, b2, 2 * b3, z, z, b4, z], axis=1),
            np.stack([z, z, z, z, z, z, b1, b2, b3, 2 * b4], axis=1),
        ], axis=2)  # (B, 10, 4)
        jac = l_mat @ dp  # (B, 6, 4)
        step = np.einsum("bij,bj->bi", np.linalg.pinv(jac), r)
        betas = betas - step
    return betas


def _rigid_align(world: np.ndarray, cam: np.ndarray):
    """Batched least-squares rigid alignment world -> cam (no scale)."""
    mu_w = world.mean(axis=1)
    mu_c = cam.mean(axis=1)
    a = world - mu_w[:, None, :]
    b = cam - mu_c[:, None, :]
    h = b.transpose(0, 2, 1) @ a / world.shape[1]
    u, _, vt = np.linalg.svd(h)
    det = np.linalg.det(u @ vt)
    d = np.ones((world.shape[0], 3))
    d[:, 2] = np.sign(det)
    rot = (u * d[:, None, :]) @ vt
    t = mu_c - np.einsum("bij,bj->bi", rot, mu_w)
    return rot, t


def _reprojection_error(rot, t, pts3d, uv, intr: CameraIntrinsics):
    cam = pts3d @ rot.transpose(0, 2, 1) + t[:, None, :]
    z = cam[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        pu = intr.fx * cam[..., 0] / z + intr.cx
        pv = intr.fy * cam[..., 1] / z + intr.cy
    err = np.hypot(pu - uv[..., 0], pv - uv[..., 1])
    err = np.where(z > 1e-9, err, np.inf)
    return err.mean(axis=1)


def epnp_batch(points3d: np.ndarray, points2d: np.ndarray,
               intrinsics: CameraIntrinsics):
    """Solve a batch of PnP problems.

    points3d: (B, n, 3), points2d: (B, n, 2) with n >= 4. Returns
    (rotations (B, 3, 3), translations (B, 3), mean reprojection errors (B,),
    valid flags (B,)); invalid items (coplanar 3D sets, no finite candidate)
    carry err = inf.
    """
    pts3d = np.asarray(points3d, dtype=float)
    uv = np.asarray(points2d, dtype=float)
    if pts3d.ndim != 3 or pts3d.shape[2] != 3 or uv.shape != pts3d.shape[:2] + (2,):
        raise ValueError("expected points3d (B, n, 3) and matching points2d (B, n, 2)")
    b, n = pts3d.shape[0], pts3d.shape[1]
    if n < 4:
        raise ValueError("need at least 4 correspondences")

    ctrl, ok = _control_points(pts3d)
    alpha = _barycentric(pts3d, ctrl, ok)
    m = _constraint_matrix(alpha, uv, intrinsics)
    mtm = m.transpose(0, 2, 1) @ m
    _, vecs = np.linalg.eigh(mtm)
    null_vecs = vecs[:, :, :4]  # ascending eigenvalues: 4 smallest

    l_mat, rho = _beta_system(null_vecs, ctrl)
    betas = _initial_betas(l_mat, rho)  # (B, 3, 4)

    k = betas.shape[1]
    flat = _gauss_newton(np.repeat(l_mat, k, axis=0), np.repeat(rho, k, axis=0),
                         betas.reshape(b * k, 4))

    x = np.einsum("bik,bk->bi", np.repeat(null_vecs, k, axis=0), flat)  # (B*k, 12)
    cc = x.reshape(b * k, 4, 3)
    alpha_rep = np.repeat(alpha, k, axis=0)
    pc = alpha_rep @ cc
    flip = pc[..., 2].mean(axis=1) < 0
    pc = np.where(flip[:, None, None], -pc, pc)

    world = np.repeat(pts3d, k, axis=0)
    rot, t = _rigid_align(world, pc)
    err = _reprojection_error(rot, t, world, np.repeat(uv, k, axis=0), intrinsics)

    err = err.reshape(b, k)
    rot = rot.reshape(b, k, 3, 3)
    t = t.reshape(b, k, 3)
    best = np.argmin(err, axis=1)
    rows = np.arange(b)
    best_err = err[rows, best]
    valid = ok & np.isfinite(best_err)
    return rot[rows, best], t[rows, best], best_err, valid


def epnp(points3d, points2d, intrinsics: CameraIntrinsics) -> Pose:
    """Pose from n >= 4 3D-to-2D correspondences.

    Raises DegenerateGeometryError for (near-)coplanar 3D points or when no
    candidate pose places the points in front of the camera.
    """
    pts3d = np.asarray(points3d, dtype=float)
    uv = np.asarray(points2d, dtype=float)
    if pts3d.ndim != 2 or pts3d.shape[0] < 4:
        raise ValueError("need at least 4 correspondences")
    if not (np.all(np.isfinite(pts3d)) and np.all(np.isfinite(uv))):
        raise ValueError("correspondences must be finite")
    rot, t, _, valid = epnp_batch(pts3d[None], uv[None], intrinsics)
    if not valid[0]:
        raise DegenerateGeometryError(
            "EPnP failed: coplanar 3D points or degenerate configuration")
    return Pose(rotmat_to_quat(rot[0]), tuple(t[0]))
