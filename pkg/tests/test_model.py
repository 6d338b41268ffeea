import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from virodyn.eigen import Stability, eigensolve_3x3
from virodyn.model import (
    State3,
    beta_star,
    coexistence_equilibrium,
    immortal_virus_equilibrium_eigenvalues,
    jacobian_ode,
    other_root_equilibrium,
    quadratic_coefficients,
    rhs_array,
    rhs_ode,
)
from virodyn.params import table1

positive = st.floats(0.05, 8.0)


def test_origin_and_carrying_capacity_are_fixed_points(baseline):
    assert rhs_ode(State3(0.0, 0.0, 0.0), baseline) == (0.0, 0.0, 0.0)
    assert rhs_ode(State3(1.0, 0.0, 0.0), baseline) == (0.0, 0.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(r_u=positive, beta=st.floats(1e-4, 0.1), alpha=st.floats(1.5, 5000.0),
       delta_v=positive, delta_i=positive)
def test_fixed_points_hold_for_all_positive_rates(r_u, beta, alpha,
                                                  delta_v, delta_i):
    p = table1(r_u=r_u, beta=beta, alpha=alpha, delta_v=delta_v,
               delta_i=delta_i)
    for s in (State3(0.0, 0.0, 0.0), State3(1.0, 0.0, 0.0)):
        assert rhs_ode(s, p) == (0.0, 0.0, 0.0)


def test_rhs_matches_stated_form(baseline):
    p = baseline.replace(beta=0.002)
    u, v, i = 0.4, 30.0, 0.05
    du, dv, di = rhs_ode(State3(u, v, i), p)
    assert du == pytest.approx(p.r_u * u * (1 - (u + i)) - p.beta * u * v)
    assert dv == pytest.approx(p.alpha * p.delta_i * i - p.delta_v * v
                               - p.beta * (u + i) * v)
    assert di == pytest.approx(p.beta * u * v - p.delta_i * i)


def test_rhs_broadcasts_over_arrays(baseline):
    u = np.linspace(0.0, 1.0, 5)
    v = np.linspace(0.0, 50.0, 5)
    i = np.linspace(0.0, 0.2, 5)
    du, dv, di = rhs_ode(State3(u, v, i), baseline)
    for k in range(5):
        one = rhs_ode(State3(u[k], v[k], i[k]), baseline)
        assert du[k] == pytest.approx(one.u)
        assert dv[k] == pytest.approx(one.v)
        assert di[k] == pytest.approx(one.i)


def _fd_jacobian(s, p, h=1e-6):
    s = np.asarray(s, dtype=float)
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        cols.append((rhs_array(s + e, p) - rhs_array(s - e, p)) / (2.0 * h))
    return np.column_stack(cols)


def test_jacobian_matches_finite_differences(baseline):
    # Central-difference oracle, 100 random states, 1e-5 relative.
    rng = np.random.default_rng(2024)
    p = baseline.replace(beta=0.002)
    for _ in range(100):
        s = State3(rng.uniform(0, 1), rng.uniform(0, 60), rng.uniform(0, 1))
        analytic = jacobian_ode(s, p)
        approx = _fd_jacobian(s, p)
        scale = np.abs(analytic).max() + 1.0
        assert np.abs(analytic - approx).max() < 1e-5 * scale


def test_origin_eigenvalues(baseline):
    trip = eigensolve_3x3(jacobian_ode(State3(0.0, 0.0, 0.0), baseline))
    got = sorted(z.real for z in trip.values)
    assert got == pytest.approx(sorted([baseline.r_u, -baseline.delta_i,
                                        -baseline.delta_v]), abs=1e-12)
    # eradication is always unstable: r_u > 0
    assert trip.stability is Stability.UNSTABLE


@settings(max_examples=50, deadline=None)
@given(r_u=positive)
def test_eradication_always_unstable(r_u):
    p = table1(r_u=r_u)
    trip = eigensolve_3x3(jacobian_ode(State3(0.0, 0.0, 0.0), p))
    assert trip.max_real == pytest.approx(r_u, rel=1e-9)
    assert trip.stability is Stability.UNSTABLE


def test_beta_star_table1(baseline):
    assert beta_star(baseline) == pytest.approx(4.0 / 3499.0, abs=1e-15)
    assert beta_star(baseline) == pytest.approx(0.0011432, abs=1e-7)


def test_beta_star_trivial_case():
    assert beta_star(table1(delta_v=4.0, alpha=2.0)) == pytest.approx(4.0)


def test_beta_star_inversion_gives_delta_v_threshold(baseline):
    # At beta = 0.002 the (1,0,0) state changes stability at
    # delta_v = beta (alpha - 1) = 6.998.
    dv_threshold = 0.002 * (baseline.alpha - 1.0)
    assert dv_threshold == pytest.approx(6.998, abs=1e-12)
    lo = eigensolve_3x3(jacobian_ode(
        State3(1.0, 0.0, 0.0), baseline.replace(beta=0.002,
                                                delta_v=dv_threshold - 1e-3)))
    hi = eigensolve_3x3(jacobian_ode(
        State3(1.0, 0.0, 0.0), baseline.replace(beta=0.002,
                                                delta_v=dv_threshold + 1e-3)))
    assert lo.stability is Stability.UNSTABLE
    assert hi.stability is Stability.STABLE


def test_beta_star_requires_amplification():
    stub = SimpleNamespace(alpha=1.0, delta_v=4.0)
    with pytest.raises(ValueError):
        beta_star(stub)


def test_stability_flips_exactly_at_beta_star(baseline):
    bs = beta_star(baseline)
    for factor, expect in ((0.9, Stability.STABLE), (1.1, Stability.UNSTABLE)):
        trip = eigensolve_3x3(jacobian_ode(
            State3(1.0, 0.0, 0.0), baseline.replace(beta=bs * factor)))
        assert trip.stability is expect
    at = eigensolve_3x3(jacobian_ode(State3(1.0, 0.0, 0.0),
                                     baseline.replace(beta=bs)))
    assert abs(at.max_real) < 1e-12


def _bisect_quadratic(p, lo=0.0, hi=1.0, iters=200):
    # Independent root of A u^2 + B u + C inside [lo, hi].
    a, b, c = quadratic_coefficients(p)

    def f(u):
        return (a * u + b) * u + c

    flo, fhi = f(lo), f(hi)
    assert flo * fhi < 0.0, "bracket must straddle the root"
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_coexistence_matches_published_density(baseline):
    eq = coexistence_equilibrium(baseline.replace(beta=0.002))
    assert eq is not None and eq.biological
    assert eq.state.u == pytest.approx(0.57161, abs=5e-6)


def test_coexistence_below_branch_point_is_nonbiological(baseline):
    eq = coexistence_equilibrium(baseline.replace(beta=0.001))
    assert eq is not None
    assert not eq.biological
    assert min(eq.state.v, eq.state.i) < 0.0


def test_coexistence_zeroes_rhs_and_matches_bisection(baseline):
    p = baseline.replace(beta=0.005)
    eq = coexistence_equilibrium(p)
    assert np.max(np.abs(np.asarray(rhs_ode(eq.state, p)))) < 1e-10
    assert eq.state.u == pytest.approx(_bisect_quadratic(p), abs=1e-10)


def test_other_root_is_negative_and_vieta_holds(baseline):
    p = baseline.replace(beta=0.002)
    main = coexistence_equilibrium(p)
    other = other_root_equilibrium(p)
    assert other.state.u < 0.0
    a, _, c = quadratic_coefficients(p)
    assert main.state.u * other.state.u == pytest.approx(c / a, rel=1e-10)
    # Residual tolerance 1e-10 relative to the largest right-hand-side
    # addend: the non-biological root sits at |v| ~ 2e6 where the balanced
    # terms reach ~5e7 and absolute 1e-10 is below roundoff.
    for eq in (main, other):
        u, v, i = eq.state
        scale = max(1.0, abs(p.alpha * p.delta_i * i), abs(p.delta_v * v),
                    abs(p.beta * (u + i) * v), abs(p.r_u * u * (1 - u - i)))
        assert np.max(np.abs(np.asarray(rhs_ode(eq.state, p)))) < 1e-10 * scale


def test_coexistence_density_decreases_with_infectivity(baseline):
    # Monotone over [beta_BP, 10 * beta_HB] on a sampled grid.
    grid = np.linspace(beta_star(baseline) * 1.001, 10 * 0.00871, 60)
    dens = [coexistence_equilibrium(baseline.replace(beta=b)).state.u
            for b in grid]
    assert all(a > b for a, b in zip(dens, dens[1:]))


def test_immortal_virus_spectrum(baseline):
    p = baseline.replace(delta_v=0.0, beta=0.002)
    trip = immortal_virus_equilibrium_eigenvalues(0.0, p)
    assert sorted(z.real for z in trip.values) == pytest.approx(
        sorted([0.0, p.r_u, -p.delta_i]))

    marginal = immortal_virus_equilibrium_eigenvalues(p.r_u / p.beta, p)
    assert any(z == 0.0 for z in marginal.values)
    assert marginal.values[0] == 0.0  # largest real part exactly zero

    heavy = immortal_virus_equilibrium_eigenvalues(2.0 * p.r_u / p.beta, p)
    assert sorted(z.real for z in heavy.values) == pytest.approx(
        sorted([0.0, -0.3, -1.0]), abs=1e-12)


def test_immortal_virus_requires_zero_decay(baseline):
    with pytest.raises(ValueError):
        immortal_virus_equilibrium_eigenvalues(1.0, baseline)


def test_degenerate_quadratic_at_zero_decay(baseline):
    # With delta_v = 0 the constant coefficient vanishes: the biological
    # root collapses onto u = 0 (the immortal-virus family).
    eq = coexistence_equilibrium(baseline.replace(delta_v=0.0, beta=0.002))
    assert eq.state.u == pytest.approx(0.0, abs=1e-15)
    assert eq.state.v == pytest.approx(baseline.r_u / 0.002, rel=1e-12)
