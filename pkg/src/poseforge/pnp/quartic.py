"""Closed-form quartic root solver (Ferrari's method with a resolvent cubic).

Complex intermediates (cube roots in Cardano's formula, square roots of
complex quantities) are evaluated through the polar form
z^n = r^n (cos(n*theta) + i sin(n*theta)).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from ..errors import NoSolutionError


@dataclass(frozen=True)
class QuarticRoots:
    """Real roots (ascending, with multiplicity) and count of conjugate pairs."""

    real_roots: tuple[float, ...]
    complex_pair_count: int

    def __post_init__(self):
        if len(self.real_roots) + 2 * self.complex_pair_count != 4:
            raise ValueError("root multiplicities must account for degree 4")


def complex_power(z: complex, exponent: float) -> complex:
    """z**exponent through the polar form r^n (cos n*theta + i sin n*theta)."""
    r = abs(z)
    if r == 0.0:
        return 0j
    theta = cmath.phase(z)
    rn = r ** exponent
    return complex(rn * math.cos(exponent * theta), rn * math.sin(exponent * theta))


def _cubic_real_roots(a2: float, a1: float, a0: float) -> list[float]:
    """Real roots of t^3 + a2 t^2 + a1 t + a0 (Cardano / polar-form powers)."""
    shift = a2 / 3.0
    p = a1 - a2 * a2 / 3.0
    q = 2.0 * a2 ** 3 / 27.0 - a2 * a1 / 3.0 + a0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0.0:
        sq = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + sq) ** (1.0 / 3.0), -q / 2.0 + sq)
        v = math.copysign(abs(-q / 2.0 - sq) ** (1.0 / 3.0), -q / 2.0 - sq)
        return [u + v - shift]
    # three real roots: cube roots of a genuinely complex number
    u3 = complex(-q / 2.0, math.sqrt(-disc))
    r = abs(u3)
    theta = cmath.phase(u3)
    croot = r ** (1.0 / 3.0)
    return [2.0 * croot * math.cos((theta + 2.0 * math.pi * k) / 3.0) - shift
            for k in range(3)]


def _quadratic(b: float, c: float) -> tuple[list[float], list[complex]]:
    """Roots of y^2 + b y + c with real coefficients, split real/complex."""
    disc = b * b - 4.0 * c
    if disc >= 0.0:
        sq = math.sqrt(disc)
        return [(-b - sq) / 2.0, (-b + sq) / 2.0], []
    sq = complex_power(complex(disc, 0.0), 0.5)
    root = (-b + sq) / 2.0
    return [], [root, root.conjugate()]


def _polish(root: float, coeffs: tuple[float, ...]) -> float:
    """Two Newton steps on the full quartic; skipped near multiple roots."""
    a, b, c, d, e = coeffs
    x = root
    for _ in range(2):
        f = (((a * x + b) * x + c) * x + d) * x + e
        fp = ((4.0 * a * x + 3.0 * b) * x + 2.0 * c) * x + d
        if abs(fp) < 1e-300:
            break
        x -= f / fp
    return x


def _polish_complex(root: complex, coeffs: tuple[float, ...]) -> complex:
    a, b, c, d, e = coeffs
    x = root
    for _ in range(2):
        f = (((a * x + b) * x + c) * x + d) * x + e
        fp = ((4.0 * a * x + 3.0 * b) * x + 2.0 * c) * x + d
        if abs(fp) < 1e-300:
            break
        x -= f / fp
    return x


def quartic_roots(a: float, b: float, c: float, d: float, e: float) -> QuarticRoots:
    """Solve a x^4 + b x^3 + c x^2 + d x + e = 0.

    Returns real roots sorted ascending (with multiplicity) plus the number of
    complex-conjugate pairs. Raises NoSolutionError when |a| <= 1e-12 (the
    caller must reduce the degree instead).
    """
    if abs(a) <= 1e-12:
        raise NoSolutionError("leading coefficient is (numerically) zero")
    coeffs = (float(a), float(b), float(c), float(d), float(e))
    p, q, r, s = b / a, c / a, d / a, e / a

    # depressed quartic y^4 + A y^2 + B y + C with x = y - p/4
    shift = p / 4.0
    A = q - 3.0 * p * p / 8.0
    B = r - p * q / 2.0 + p ** 3 / 8.0
    C = s - p * r / 4.0 + p * p * q / 16.0 - 3.0 * p ** 4 / 256.0

    reals: list[float] = []
    pairs: list[complex] = []
    if abs(B) < 1e-14 * max(1.0, abs(A), abs(C)):
        # biquadratic: z^2 + A z + C = 0 with z = y^2
        zdisc = A * A - 4.0 * C
        if zdisc >= 0.0:
            sq = math.sqrt(zdisc)
            for z in ((-A - sq) / 2.0, (-A + sq) / 2.0):
                if z >= 0.0:
                    ry = math.sqrt(z)
                    reals.extend([-ry, ry])
                else:
                    iy = complex_power(complex(z, 0.0), 0.5)
                    pairs.append(iy)
        else:
            z = complex(-A / 2.0, math.sqrt(-zdisc) / 2.0)
            y = complex_power(z, 0.5)
            pairs.extend([y, -y])
    else:
        # resolvent cubic m^3 + A m^2 + (A^2/4 - C) m - B^2/8 = 0
        m = max(_cubic_real_roots(A, A * A / 4.0 - C, -B * B / 8.0))
        m = max(m, 0.0)
        s2m = math.sqrt(2.0 * m)
        if s2m < 1e-150:
            raise NoSolutionError("resolvent cubic yielded no usable root")
        half = A / 2.0 + m
        offset = B / (2.0 * s2m)
        for sign in (1.0, -1.0):
            real_part, cplx = _quadratic(sign * s2m, half - sign * offset)
            reals.extend(real_part)
            pairs.extend(cplx[:1])

    reals = sorted(_polish(y - shift, coeffs) for y in reals)
    n_pairs = 0
    for y in pairs:
        z = _polish_complex(y - shift, coeffs)
        # a polished pair that collapsed onto the real axis counts as real roots
        if z.imag == 0.0:
            reals.extend(sorted([z.real, z.real]))
            reals.sort()
        else:
            n_pairs += 1
    return QuarticRoots(tuple(reals), n_pairs)
