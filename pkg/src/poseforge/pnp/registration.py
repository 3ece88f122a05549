"""Closed-form rigid (optionally similarity) point-set registration."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateGeometryError


def umeyama_registration(source, target, with_scale: bool = False):
    """Least-squares alignment s R source_i + t ~ target_i (Umeyama's method).

    Returns (rotation 3x3, translation (3,), scale). The rotation is always a
    proper rotation: a reflection in the SVD solution is corrected through the
    determinant sign. Raises DegenerateGeometryError for fewer than 3 points or
    a collinear/coincident source configuration.
    """
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    if src.shape != tgt.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValueError("source and target must be matching (n, 3) arrays")
    n = src.shape[0]
    if n < 3:
        raise DegenerateGeometryError("registration needs at least 3 points")

    mu_src = src.mean(axis=0)
    mu_tgt = tgt.mean(axis=0)
    a = src - mu_src
    b = tgt - mu_tgt

    sing = np.linalg.svd(a, compute_uv=False)
    if sing[1] <= 1e-12 * max(sing[0], 1e-30):
        raise DegenerateGeometryError("source points are collinear or coincident")

    cov = b.T @ a / n
    u, s, vt = np.linalg.svd(cov)
    d = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        d[2] = -1.0
    rotation = u @ np.diag(d) @ vt

    if with_scale:
        var_src = float(np.sum(a * a)) / n
        scale = float(np.sum(s * d)) / var_src
    else:
        scale = 1.0
    translation = mu_tgt - scale * rotation @ mu_src
    return rotation, translation, scale
