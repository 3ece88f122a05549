import numpy as np
import pytest

from poseforge.errors import DegenerateGeometryError
from poseforge.pnp.registration import umeyama_registration


def random_rotation(rng):
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def test_identity_on_equal_sets():
    pts = np.random.default_rng(30).uniform(-1, 1, (10, 3))
    r, t, s = umeyama_registration(pts, pts, with_scale=True)
    assert np.allclose(r, np.eye(3), atol=1e-12)
    assert np.allclose(t, 0, atol=1e-12)
    assert s == pytest.approx(1.0, abs=1e-12)


def test_exact_rigid_motion_recovered():
    pts = np.random.default_rng(31).uniform(-1, 1, (12, 3))
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])  # 90 deg about z
    shift = np.array([1.0, 2.0, 3.0])
    r, t, s = umeyama_registration(pts, pts @ rot.T + shift)
    assert np.max(np.abs(r - rot)) < 1e-10
    assert np.max(np.abs(t - shift)) < 1e-10
    assert s == 1.0


def test_random_similarity_transforms():
    rng = np.random.default_rng(32)
    for _ in range(50):
        pts = rng.uniform(-2, 2, (20, 3))
        rot = random_rotation(rng)
        shift = rng.uniform(-5, 5, 3)
        scale = rng.uniform(0.2, 3.0)
        tgt = scale * pts @ rot.T + shift
        r, t, s = umeyama_registration(pts, tgt, with_scale=True)
        residual = np.max(np.linalg.norm(s * pts @ r.T + t - tgt, axis=1))
        assert residual < 1e-9
        assert np.max(np.abs(r - rot)) < 1e-9
        assert s == pytest.approx(scale, rel=1e-10)


def test_rotation_is_proper_even_for_reflected_target():
    rng = np.random.default_rng(33)
    pts = rng.uniform(-1, 1, (15, 3))
    tgt = pts.copy()
    tgt[:, 2] *= -1  # mirror image
    r, _, _ = umeyama_registration(pts, tgt)
    assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)


def test_minimizes_least_squares_against_perturbations():
    rng = np.random.default_rng(34)
    pts = rng.uniform(-1, 1, (10, 3))
    tgt = pts @ random_rotation(rng).T + rng.uniform(-1, 1, 3) + 0.01 * rng.standard_normal((10, 3))
    r, t, s = umeyama_registration(pts, tgt)
    base = np.sum((s * pts @ r.T + t - tgt) ** 2)
    for _ in range(20):
        # small random rotation perturbations must not improve the objective
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        angle = 1e-3
        k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
        r2 = (np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * k @ k) @ r
        t2 = tgt.mean(axis=0) - r2 @ pts.mean(axis=0)
        assert np.sum((pts @ r2.T + t2 - tgt) ** 2) >= base - 1e-15


def test_degenerate_inputs_rejected():
    line = np.outer(np.arange(5, dtype=float), [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateGeometryError):
        umeyama_registration(line, line)
    same = np.ones((4, 3))
    with pytest.raises(DegenerateGeometryError):
        umeyama_registration(same, same)
    with pytest.raises(DegenerateGeometryError):
        umeyama_registration(np.zeros((2, 3)), np.zeros((2, 3)))
