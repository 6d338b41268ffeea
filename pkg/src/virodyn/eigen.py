"""Eigenvalues of real 3x3 matrices via the characteristic cubic.

The matrices here are always 3x3 (Jacobians of the three-species model), so
the roots are taken from a numerically stabilised closed-form cubic solve
with a Newton polish per root instead of a general-purpose QR iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

#: Real parts within this band of zero classify as marginal; continuation
#: relies on the deadband to bracket stability crossings.
STABILITY_TOL = 1e-8

#: Imaginary parts above this are treated as a genuine complex pair.
COMPLEX_PAIR_TOL = 1e-6


class Stability(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class Eigentriple:
    """Three eigenvalues sorted by descending real part, plus a stability call."""

    values: tuple[complex, complex, complex]
    stability: Stability

    @property
    def max_real(self) -> float:
        return self.values[0].real

    def complex_pair(self) -> tuple[complex, complex] | None:
        """The conjugate pair (member with +Im first), or None if all real."""
        pair = [z for z in self.values if abs(z.imag) > COMPLEX_PAIR_TOL]
        if len(pair) != 2:
            return None
        pair.sort(key=lambda z: -z.imag)
        return pair[0], pair[1]

    def dominant_real(self) -> float | None:
        """Largest eigenvalue among the (numerically) real ones, or None."""
        reals = [z.real for z in self.values if abs(z.imag) <= COMPLEX_PAIR_TOL]
        return max(reals) if reals else None


def classify(values, tol: float = STABILITY_TOL) -> Stability:
    max_real = max(z.real for z in values)
    if max_real < -tol:
        return Stability.STABLE
    if max_real > tol:
        return Stability.UNSTABLE
    return Stability.MARGINAL


def _cubic_roots(c2: float, c1: float, c0: float) -> list[complex]:
    """Roots of x^3 + c2 x^2 + c1 x + c0 with real coefficients."""
    shift = c2 / 3.0
    p = c1 - c2 * shift
    q = 2.0 * shift**3 - shift * c1 + c0

    scale = max(abs(p), abs(q), 1e-300)
    if max(abs(p), abs(q)) < 1e-14 * max(1.0, scale):
        roots = [complex(-shift)] * 3
    else:
        disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
        if disc > 0.0:
            # One real root; pick the cube-root branch that avoids cancellation.
            w = -q / 2.0 - math.copysign(math.sqrt(disc), q)
            u = math.copysign(abs(w) ** (1.0 / 3.0), w)
            v = 0.0 if u == 0.0 else -p / (3.0 * u)
            x1 = u + v
            re = -x1 / 2.0
            im = (math.sqrt(3.0) / 2.0) * abs(u - v)
            roots = [complex(x1), complex(re, im), complex(re, -im)]
        else:
            # Three real roots (casus irreducibilis): trigonometric form.
            m = 2.0 * math.sqrt(-p / 3.0)
            arg = 3.0 * q / (p * m)
            arg = min(1.0, max(-1.0, arg))
            phi = math.acos(arg)
            roots = [complex(m * math.cos((phi - 2.0 * math.pi * k) / 3.0))
                     for k in range(3)]
        roots = [z - shift for z in roots]

    return [_newton_polish(z, c2, c1, c0) for z in roots]


def _newton_polish(z: complex, c2: float, c1: float, c0: float) -> complex:
    val = ((z + c2) * z + c1) * z + c0
    der = (3.0 * z + 2.0 * c2) * z + c1
    if abs(der) > 1e-300:
        step = val / der
        if abs(step) < 1.0 + abs(z):  # reject wild corrections near multiple roots
            z = z - step
    return z


def eigensolve_3x3(m, tol: float = STABILITY_TOL) -> Eigentriple:
    """Eigenvalues of a real 3x3 matrix as roots of det(m - lambda I)."""
    a = np.asarray(m, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")

    trace = a[0, 0] + a[1, 1] + a[2, 2]
    minors = (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
              + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
              + a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    det = (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
           - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
           + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))

    roots = _cubic_roots(-trace, minors, -det)

    # A real cubic has conjugate complex roots; enforce the symmetry exactly.
    complex_roots = [z for z in roots if z.imag != 0.0]
    if len(complex_roots) == 2:
        real_roots = [z for z in roots if z.imag == 0.0]
        mean = (complex_roots[0] + complex_roots[1].conjugate()) / 2.0
        roots = real_roots + [mean, mean.conjugate()]

    roots.sort(key=lambda z: (-z.real, -z.imag))
    return Eigentriple(values=tuple(roots), stability=classify(roots, tol))
