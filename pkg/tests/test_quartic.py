import numpy as np
import pytest

from poseforge.errors import NoSolutionError
from poseforge.pnp.quartic import QuarticRoots, complex_power, quartic_roots


def companion_eigenvalues(a, b, c, d, e):
    """Independent oracle: eigenvalues of the companion matrix of the quartic."""
    m = np.zeros((4, 4))
    m[0] = [-b / a, -c / a, -d / a, -e / a]
    m[1, 0] = m[2, 1] = m[3, 2] = 1.0
    return np.linalg.eigvals(m)


def quartic_value(coeffs, x):
    a, b, c, d, e = coeffs
    return (((a * x + b) * x + c) * x + d) * x + e


def test_factored_integer_roots():
    # (x-1)(x-2)(x-3)(x-4) = x^4 - 10x^3 + 35x^2 - 50x + 24
    roots = quartic_roots(1, -10, 35, -50, 24)
    assert roots.complex_pair_count == 0
    assert np.allclose(roots.real_roots, [1, 2, 3, 4], atol=1e-10)


def test_fourth_roots_of_unity():
    roots = quartic_roots(1, 0, 0, 0, -1)
    assert roots.complex_pair_count == 1
    assert np.allclose(roots.real_roots, [-1, 1], atol=1e-10)


def test_all_complex():
    # x^4 + 1 = 0 has no real roots
    roots = quartic_roots(1, 0, 0, 0, 1)
    assert roots.real_roots == ()
    assert roots.complex_pair_count == 2


def test_leading_zero_rejected():
    with pytest.raises(NoSolutionError):
        quartic_roots(0, 1, 1, 1, 1)
    with pytest.raises(NoSolutionError):
        quartic_roots(1e-13, 1, 1, 1, 1)


def test_root_count_invariant():
    rng = np.random.default_rng(20)
    for _ in range(500):
        coeffs = rng.uniform(-5, 5, 5)
        if abs(coeffs[0]) < 1e-3:
            continue
        roots = quartic_roots(*coeffs)
        assert len(roots.real_roots) + 2 * roots.complex_pair_count == 4
        assert list(roots.real_roots) == sorted(roots.real_roots)


def test_backward_stable_residuals():
    rng = np.random.default_rng(21)
    for _ in range(2000):
        coeffs = rng.standard_normal(5)
        if abs(coeffs[0]) < 1e-3:
            continue
        a, b, c, d, e = coeffs
        for x in quartic_roots(*coeffs).real_roots:
            f = quartic_value(coeffs, x)
            fp = ((4 * a * x + 3 * b) * x + 2 * c) * x + d
            assert abs(f) / max(1.0, abs(fp)) < 1e-8


def test_matches_companion_matrix_oracle():
    # random monic quartics versus the eigenvalue oracle; draws whose oracle
    # roots sit in the ambiguous nearly-real band are re-drawn
    rng = np.random.default_rng(22)
    checked = 0
    while checked < 10_000:
        b, c, d, e = rng.uniform(-4, 4, 4)
        eig = companion_eigenvalues(1.0, b, c, d, e)
        im = np.abs(eig.imag)
        if np.any((im > 0) & (im < 1e-4)):
            continue
        oracle_real = np.sort(eig[im == 0].real)
        roots = quartic_roots(1.0, b, c, d, e)
        assert len(roots.real_roots) == oracle_real.size
        assert roots.complex_pair_count == (4 - oracle_real.size) // 2
        if oracle_real.size:
            assert np.max(np.abs(np.array(roots.real_roots) - oracle_real)) < 1e-6
        checked += 1


def test_conjugate_pairs_never_returned_as_reals():
    # (x^2+1)(x^2+4): pure complex pairs at +/-i and +/-2i
    roots = quartic_roots(1, 0, 5, 0, 4)
    assert roots == QuarticRoots((), 2)


def test_biquadratic_mixed():
    # (x^2-4)(x^2+9): reals +/-2, one pair
    roots = quartic_roots(1, 0, 5, 0, -36)
    assert roots.complex_pair_count == 1
    assert np.allclose(roots.real_roots, [-2, 2], atol=1e-10)


def test_complex_power_polar_form():
    rng = np.random.default_rng(23)
    for _ in range(200):
        z = complex(rng.standard_normal(), rng.standard_normal())
        assert abs(complex_power(z, 0.5) ** 2 - z) < 1e-12
        assert abs(complex_power(z, 1.0 / 3.0) ** 3 - z) < 1e-12


def test_scaled_coefficients_same_roots():
    r1 = quartic_roots(1, -10, 35, -50, 24)
    r2 = quartic_roots(2, -20, 70, -100, 48)
    assert np.allclose(r1.real_roots, r2.real_roots, atol=1e-9)
