"""Right-hand sides, Jacobian, and closed-form equilibria of the well-mixed model.

State convention: (u, v, i) = (uninfected tumour cells, free virus, infected
tumour cells), every component scaled by the carrying capacity.  All functions
are pure; ``u``/``v``/``i`` may be scalars or equally shaped numpy arrays
(the PDE solver applies the same reaction terms nodewise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .eigen import Eigentriple, eigensolve_3x3
from .params import ModelParams


class State3(NamedTuple):
    u: float
    v: float
    i: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.i], dtype=float)


def rhs_ode(s: State3, p: ModelParams) -> State3:
    """Time derivative of the well-mixed (u, v, i) system."""
    u, v, i = s
    du = p.r_u * u * (1.0 - (u + i)) - p.beta * u * v
    dv = p.alpha * p.delta_i * i - p.delta_v * v - p.beta * (u + i) * v
    di = p.beta * u * v - p.delta_i * i
    return State3(du, dv, di)


def rhs_array(y: np.ndarray, p: ModelParams) -> np.ndarray:
    """`rhs_ode` on a length-3 array; convenience for integrators."""
    return np.array(rhs_ode(State3(y[0], y[1], y[2]), p))


def jacobian_ode(s: State3, p: ModelParams) -> np.ndarray:
    u, v, i = s
    return np.array([
        [p.r_u * (1.0 - i - 2.0 * u) - v * p.beta, -u * p.beta, -p.r_u * u],
        [-v * p.beta, -(i + u) * p.beta - p.delta_v, -v * p.beta + p.alpha * p.delta_i],
        [v * p.beta, u * p.beta, -p.delta_i],
    ])


def beta_star(p: ModelParams) -> float:
    """Infectivity threshold where the failed-treatment state (1,0,0) flips stability."""
    if p.alpha <= 1.0:
        raise ValueError("beta_star is undefined for alpha <= 1")
    return p.delta_v / (p.alpha - 1.0)


def quadratic_coefficients(p: ModelParams) -> tuple[float, float, float]:
    """Coefficients (A, B, C) of the equilibrium quadratic A u^2 + B u + C = 0."""
    r, b, di, dv, a = p.r_u, p.beta, p.delta_i, p.delta_v, p.alpha
    A = a * b * b * r * di
    B = di * b * (a * b * di - r * dv - b * di - r * b)
    C = -di * di * dv * b
    return A, B, C


def _quadratic_roots(A: float, B: float, C: float) -> tuple[float, float] | None:
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        return None
    q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
    if q == 0.0:  # B = C = 0: double root at the origin
        return 0.0, 0.0
    r1, r2 = q / A, C / q
    return (r1, r2) if r1 >= r2 else (r2, r1)


@dataclass(frozen=True)
class ClosedFormEquilibrium:
    """A parameter-dependent fixed point with its spectrum and a viability flag."""

    state: State3
    eigen: Eigentriple
    biological: bool  # False when any component is negative


def _equilibrium_from_root(u: float, p: ModelParams) -> ClosedFormEquilibrium:
    # v from the u-nullcline, i from the infected-cell balance.
    v = p.r_u * p.delta_i * (1.0 - u) / (p.beta * (p.delta_i + p.r_u * u))
    i = p.beta * u * v / p.delta_i
    state = State3(u, v, i)
    eigen = eigensolve_3x3(jacobian_ode(state, p))
    biological = min(u, v, i) >= -1e-12
    return ClosedFormEquilibrium(state=state, eigen=eigen, biological=biological)


def _split_roots(p: ModelParams) -> tuple[float, float] | None:
    roots = _quadratic_roots(*quadratic_coefficients(p))
    if roots is None:
        return None
    hi, lo = roots
    # The coexistence branch is the root inside (0, 1] when exactly one
    # qualifies; otherwise keep the larger root for branch continuity.
    if 0.0 < lo <= 1.0 and not 0.0 < hi <= 1.0:
        return lo, hi
    return hi, lo


def coexistence_equilibrium(p: ModelParams) -> ClosedFormEquilibrium | None:
    """The coexistence fixed point (u_s, v_s, i_s), or None if the quadratic
    has no real roots.  Check ``biological`` before trusting the values."""
    roots = _split_roots(p)
    if roots is None:
        return None
    return _equilibrium_from_root(roots[0], p)


def other_root_equilibrium(p: ModelParams) -> ClosedFormEquilibrium | None:
    """The second quadratic root; negative u for biologically relevant rates."""
    roots = _split_roots(p)
    if roots is None:
        return None
    return _equilibrium_from_root(roots[1], p)


def immortal_virus_equilibrium_eigenvalues(v: float, p: ModelParams) -> Eigentriple:
    """Spectrum of the (0, v, 0) equilibrium family in the delta_v = 0 limit."""
    if p.delta_v != 0.0:
        raise ValueError("the (0, v, 0) equilibrium family requires delta_v = 0")
    if v < 0.0:
        raise ValueError("virus density must be nonnegative")
    values = [complex(0.0), complex(p.r_u - v * p.beta), complex(-p.delta_i)]
    values.sort(key=lambda z: (-z.real, -z.imag))
    from .eigen import classify

    return Eigentriple(values=tuple(values), stability=classify(values))
