"""Equilibrium continuation, bifurcation detection, and limit-cycle tracing.

Branches are followed with pseudo-arclength predictor-corrector steps in a
componentwise-scaled space (state components and the active parameter can
differ by orders of magnitude).  Stability crossings are monitored through
the 3x3 spectrum at every accepted point: a sign change of the dominant real
eigenvalue flags a branch point, a sign change of the complex pair's real
part flags a Hopf point, and either is refined by bisection with a secant
polish on the branch parametrisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .eigen import COMPLEX_PAIR_TOL, Eigentriple, eigensolve_3x3
from .integrate import IntegrationConfig, detect_peaks, integrate, series_peaks
from .model import (
    State3,
    coexistence_equilibrium,
    jacobian_ode,
    rhs_array,
    rhs_ode,
)
from .params import ModelParams

NEWTON_TOL = 1e-12
EVENT_RE_TOL = 1e-9
STATE_BOUND = 10.0

CONTINUABLE = ("beta", "alpha", "delta_v", "delta_i")

# Greatest lower bound of each parameter's valid domain; delta_v may sit on
# its bound (the immortal-virus limit), the others are open below.
_PARAM_FLOOR = {"beta": 0.0, "alpha": 1.0, "delta_v": 0.0, "delta_i": 0.0}
_FLOOR_CLOSED = {"delta_v"}


class ContinuationError(RuntimeError):
    pass


class ConvergenceError(ContinuationError):
    pass


class SingularJacobianError(ContinuationError):
    """Singular Jacobian (e.g. at a fold); caller may switch parametrisation."""


@dataclass(frozen=True)
class EquilibriumPoint:
    param_value: float
    state: State3
    eigen: Eigentriple

    @property
    def stable(self) -> bool:
        from .eigen import Stability

        return self.eigen.stability is Stability.STABLE


@dataclass(frozen=True)
class BifurcationEvent:
    kind: str  # "branch_point" or "hopf"
    param_value: float
    state: State3
    eigenvalue: complex  # the crossing eigenvalue (+Im member of a Hopf pair)


@dataclass
class Branch:
    parameter: str
    points: list[EquilibriumPoint] = field(default_factory=list)
    events: list[BifurcationEvent] = field(default_factory=list)

    def event(self, kind: str) -> BifurcationEvent:
        """The unique event of the given kind; raises if absent or ambiguous."""
        found = [e for e in self.events if e.kind == kind]
        if len(found) != 1:
            raise LookupError(f"expected one {kind} event, found {len(found)}")
        return found[0]

    def param_values(self) -> np.ndarray:
        return np.array([pt.param_value for pt in self.points])


def param_derivative(s: State3, p: ModelParams, parameter: str) -> np.ndarray:
    """Exact derivative of the right-hand side w.r.t. one rate parameter."""
    u, v, i = s
    if parameter == "beta":
        return np.array([-u * v, -(u + i) * v, u * v])
    if parameter == "alpha":
        return np.array([0.0, p.delta_i * i, 0.0])
    if parameter == "delta_v":
        return np.array([0.0, -v, 0.0])
    if parameter == "delta_i":
        return np.array([0.0, p.alpha * i, -i])
    raise ValueError(f"unknown continuation parameter {parameter!r}")


def newton_equilibrium(
    p: ModelParams,
    guess: State3,
    parameter: str = "beta",
    tol: float = NEWTON_TOL,
    max_iter: int = 50,
) -> EquilibriumPoint:
    """Damped Newton solve of rhs = 0 from ``guess``."""
    x = np.asarray(guess, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError("guess must be finite")
    fval = rhs_array(x, p)
    res = float(np.linalg.norm(fval))
    for _ in range(max_iter):
        if res < tol:
            break
        jac = jacobian_ode(State3(*x), p)
        try:
            step = np.linalg.solve(jac, -fval)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(
                f"singular Jacobian at {tuple(x)}") from exc
        lam = 1.0
        while lam >= 1.0 / 1024.0:
            x_try = x + lam * step
            f_try = rhs_array(x_try, p)
            res_try = float(np.linalg.norm(f_try))
            if np.isfinite(res_try) and res_try < res * (1.0 - 0.25 * lam) + tol:
                x, fval, res = x_try, f_try, res_try
                break
            lam *= 0.5
        else:
            raise ConvergenceError(f"Newton stalled at residual {res:.3e}")
    else:
        raise ConvergenceError(f"Newton did not reach {tol:.1e} "
                               f"(residual {res:.3e})")
    state = State3(*x)
    return EquilibriumPoint(
        param_value=getattr(p, parameter),
        state=state,
        eigen=eigensolve_3x3(jacobian_ode(state, p)),
    )


def _dominant_real(eigen: Eigentriple) -> float | None:
    return eigen.dominant_real()


def _pair_real(eigen: Eigentriple) -> float | None:
    pair = eigen.complex_pair()
    return None if pair is None else pair[0].real


def refine_crossing(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    g_tol: float = EVENT_RE_TOL,
    x_tol: float = 0.0,
    max_iter: int = 200,
) -> float:
    """Zero of a scalar function on a sign-changing bracket.

    Bisection with secant proposals whenever they fall inside the current
    bracket; converges to |g| < g_tol (or bracket width below x_tol).
    """
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0.0:
        raise ValueError(f"bracket does not straddle a zero: "
                         f"g({lo}) = {glo:.3e}, g({hi}) = {ghi:.3e}")
    x_prev, g_prev = lo, glo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if g_prev != ghi and abs(ghi - g_prev) > 0.0:
            secant = hi - ghi * (hi - x_prev) / (ghi - g_prev)
            if lo < secant < hi:
                mid = secant
        gm = g(mid)
        if abs(gm) < g_tol:
            return mid
        x_prev, g_prev = hi, ghi
        if glo * gm < 0.0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
        if hi - lo <= x_tol + 1e-15 * max(abs(lo), abs(hi)):
            return 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def _natural_point(p: ModelParams, parameter: str, value: float,
                   guess: State3) -> EquilibriumPoint:
    return newton_equilibrium(p.replace(**{parameter: value}), guess, parameter)


def _refine_event(
    p: ModelParams,
    parameter: str,
    a: EquilibriumPoint,
    b: EquilibriumPoint,
    extract: Callable[[Eigentriple], float | None],
) -> BifurcationEvent | None:
    """Refine an eigenvalue crossing between two consecutive branch points."""
    cache: dict[float, EquilibriumPoint] = {a.param_value: a, b.param_value: b}

    def g(q: float) -> float:
        if q not in cache:
            # Linear state predictor between the bracketing points.
            w = (q - a.param_value) / (b.param_value - a.param_value)
            guess = State3(*((1.0 - w) * np.asarray(a.state)
                             + w * np.asarray(b.state)))
            cache[q] = _natural_point(p, parameter, q, guess)
        val = extract(cache[q].eigen)
        if val is None:
            raise ConvergenceError(
                f"eigenvalue structure changed inside bracket at {parameter}={q}")
        return val

    lo, hi = sorted((a.param_value, b.param_value))
    try:
        q_star = refine_crossing(g, lo, hi, g_tol=EVENT_RE_TOL,
                                 x_tol=1e-14 * max(1.0, abs(hi)))
    except (ValueError, ConvergenceError):
        return None
    point = cache.get(q_star)
    if point is None:
        point = _natural_point(p, parameter, q_star,
                               cache[min(cache, key=lambda k: abs(k - q_star))].state)
    crossing = min(point.eigen.values, key=lambda z: abs(z.real))
    if abs(crossing.imag) > COMPLEX_PAIR_TOL:
        kind = "hopf"
        crossing = complex(crossing.real, abs(crossing.imag))
    else:
        kind = "branch_point"
        crossing = complex(crossing.real, 0.0)
    return BifurcationEvent(kind=kind, param_value=q_star,
                            state=point.state, eigenvalue=crossing)


def _tangent(
    p: ModelParams,
    parameter: str,
    point: EquilibriumPoint,
    weights: np.ndarray,
    previous: np.ndarray | None,
) -> np.ndarray:
    """Unit tangent of the branch in scaled (state, parameter) coordinates."""
    jac = jacobian_ode(point.state, p.replace(**{parameter: point.param_value}))
    fq = param_derivative(point.state, p, parameter)
    a = np.zeros((4, 4))
    a[:3, :3] = jac * weights[:3]
    a[:3, 3] = fq * weights[3]
    a[3] = previous if previous is not None else np.array([0.0, 0.0, 0.0, 1.0])
    rhs = np.array([0.0, 0.0, 0.0, 1.0])
    try:
        tau = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularJacobianError("tangent system singular") from exc
    norm = float(np.linalg.norm(tau))
    if norm == 0.0:
        raise SingularJacobianError("degenerate tangent")
    return tau / norm


def _corrector(
    p: ModelParams,
    parameter: str,
    z_pred: np.ndarray,
    tau: np.ndarray,
    weights: np.ndarray,
    max_iter: int = 12,
) -> tuple[EquilibriumPoint, int]:
    """Newton iteration orthogonal to the tangent through the predictor.

    Works in scaled coordinates z = (state / w_x, param / w_q).
    """
    z = z_pred.copy()
    for it in range(1, max_iter + 1):
        x = z[:3] * weights[:3]
        q = z[3] * weights[3]
        try:
            pq = p.replace(**{parameter: q})
        except ValueError as exc:
            raise ConvergenceError(f"corrector left the valid domain of "
                                   f"{parameter}") from exc
        fval = rhs_array(x, pq)
        ortho = float(tau @ (z - z_pred))
        res = float(np.linalg.norm(fval))
        if res < NEWTON_TOL and abs(ortho) < 1e-12:
            state = State3(*x)
            return (
                EquilibriumPoint(param_value=q, state=state,
                                 eigen=eigensolve_3x3(jacobian_ode(state, pq))),
                it,
            )
        a = np.zeros((4, 4))
        a[:3, :3] = jacobian_ode(State3(*x), pq) * weights[:3]
        a[:3, 3] = param_derivative(State3(*x), pq, parameter) * weights[3]
        a[3] = tau
        try:
            dz = np.linalg.solve(a, -np.concatenate([fval, [ortho]]))
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("corrector system singular") from exc
        z = z + dz
        if not np.all(np.isfinite(z)):
            raise ConvergenceError("corrector diverged")
    raise ConvergenceError("corrector did not converge")


def continue_branch(
    p: ModelParams,
    parameter: str,
    prange: tuple[float, float],
    start: EquilibriumPoint,
    *,
    ds0: float = 0.005,
    ds_max: float = 0.02,
    ds_min: float = 1e-10,
    extend_fraction: float = 0.05,
    max_points: int = 5000,
) -> Branch:
    """Trace an equilibrium branch across ``prange`` from a boundary start.

    The walk overshoots each end of the requested range by
    ``extend_fraction`` of its width so that stability crossings sitting at
    (or just beyond) a boundary are still bracketed and refined; recorded
    points cover the walked range and stay monotone in the parameter.
    """
    if parameter not in CONTINUABLE:
        raise ValueError(f"unknown continuation parameter {parameter!r}")
    lo, hi = prange
    if not lo < hi:
        raise ValueError("range must satisfy lo < hi")
    width = hi - lo
    tol_edge = 1e-9 * max(1.0, abs(lo), abs(hi))
    at_lo = abs(start.param_value - lo) <= tol_edge
    at_hi = abs(start.param_value - hi) <= tol_edge
    if not (at_lo or at_hi):
        raise ValueError("start must be a converged equilibrium at a range boundary")
    residual = float(np.linalg.norm(
        rhs_array(np.asarray(start.state), p.replace(**{parameter: start.param_value}))))
    if residual > 1e-9:
        raise ValueError(f"start point residual {residual:.2e} too large")

    ext = extend_fraction * width
    floor = _PARAM_FLOOR[parameter]
    walk_lo = max(lo - ext,
                  floor if parameter in _FLOOR_CLOSED
                  else floor + 1e-3 * (lo - floor))
    walk_hi = hi + ext

    def walk(direction: float) -> list[EquilibriumPoint]:
        points = [start]
        weights = np.array([
            max(1.0, abs(start.state.u)),
            max(1.0, abs(start.state.v)),
            max(1.0, abs(start.state.i)),
            width,
        ])
        tau = _tangent(p, parameter, start, weights, previous=None)
        if tau[3] * direction < 0.0:
            tau = -tau
        ds = ds0
        current = start
        while len(points) < max_points:
            q = current.param_value
            if direction > 0 and q >= walk_hi - tol_edge:
                break
            if direction < 0 and q <= walk_lo + tol_edge:
                break
            weights = np.array([
                max(1.0, abs(current.state.u)),
                max(1.0, abs(current.state.v)),
                max(1.0, abs(current.state.i)),
                width,
            ])
            try:
                tau_new = _tangent(p, parameter, current, weights, previous=tau)
            except SingularJacobianError:
                tau_new = tau
            if float(tau_new @ tau) < 0.0:
                tau_new = -tau_new
            tau = tau_new

            z_here = np.concatenate([np.asarray(current.state) / weights[:3],
                                     [current.param_value / weights[3]]])
            stepped = None
            exhausted = False
            while stepped is None:
                z_pred = z_here + ds * tau
                try:
                    stepped, n_it = _corrector(p, parameter, z_pred, tau, weights)
                except ConvergenceError:
                    stepped = None
                else:
                    # Reject steps that run against the walk direction.
                    if (stepped.param_value - q) * direction <= 0.0:
                        stepped = None
                if stepped is None:
                    ds *= 0.4
                    if ds >= ds_min:
                        continue
                    # Stalling right at the walk boundary just ends the leg
                    # (typically the parameter's own domain edge).
                    near_edge = (q - walk_lo < 0.02 * width if direction < 0
                                 else walk_hi - q < 0.02 * width)
                    if near_edge:
                        exhausted = True
                        break
                    raise ContinuationError(
                        f"continuation step underflow near {parameter} = {q}")
            if exhausted:
                break
            points.append(stepped)
            current = stepped
            if n_it <= 3:
                ds = min(ds * 1.6, ds_max)
            elif n_it >= 7:
                ds = max(ds * 0.5, ds_min)
            # Divergence guard in natural scales: v enters the dynamics as
            # beta*v/r_u, which is O(1) along any equilibrium branch.
            beta_here = current.param_value if parameter == "beta" else p.beta
            scaled = (abs(current.state.u), abs(current.state.i),
                      abs(current.state.v) * beta_here / p.r_u)
            if max(scaled) > STATE_BOUND:
                break  # branch left the trusted state box
        return points

    # Walk both ways; the short leg only covers the boundary extension.
    forward = walk(+1.0)
    backward = walk(-1.0)
    ordered = list(reversed(backward))[:-1] + forward

    branch = Branch(parameter=parameter, points=ordered)

    for extract in (_dominant_real, _pair_real):
        for a, b in zip(ordered[:-1], ordered[1:]):
            ga, gb = extract(a.eigen), extract(b.eigen)
            if ga is None or gb is None:
                continue
            if ga == 0.0 or gb == 0.0 or ga * gb > 0.0:
                continue
            event = _refine_event(p, parameter, a, b, extract)
            if event is not None and not any(
                    abs(event.param_value - e.param_value) <= 1e-7 * max(1.0, abs(e.param_value))
                    and e.kind == event.kind for e in branch.events):
                branch.events.append(event)
    branch.events.sort(key=lambda e: e.param_value)
    return branch


def refine_hopf(
    p: ModelParams,
    parameter: str,
    bracket: tuple[float, float],
    *,
    re_tol: float = EVENT_RE_TOL,
) -> BifurcationEvent:
    """Refine a Hopf point of the coexistence equilibrium inside ``bracket``.

    The bracket endpoints must give opposite signs of the complex pair's
    real part.
    """

    def g(q: float) -> float:
        eq = coexistence_equilibrium(p.replace(**{parameter: q}))
        if eq is None:
            raise ValueError(f"no coexistence equilibrium at {parameter} = {q}")
        pair = eq.eigen.complex_pair()
        if pair is None:
            raise ValueError(f"no complex pair at {parameter} = {q}")
        return pair[0].real

    q_star = refine_crossing(g, bracket[0], bracket[1], g_tol=re_tol,
                             x_tol=1e-15 * max(1.0, abs(bracket[1])))
    eq = coexistence_equilibrium(p.replace(**{parameter: q_star}))
    assert eq is not None
    pair = eq.eigen.complex_pair()
    assert pair is not None
    return BifurcationEvent(kind="hopf", param_value=q_star,
                            state=eq.state, eigenvalue=pair[0])


@dataclass(frozen=True)
class LimitCyclePoint:
    param_value: float
    u_max: float
    u_min: float
    period: float
    converged: bool


def limit_cycle_branch(
    p: ModelParams,
    parameter: str,
    values: Sequence[float],
    *,
    t_end: float = 4000.0,
    discard_fraction: float = 0.6,
    n_average: int = 5,
    spread_tol: float = 1e-4,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-16,
    stride: float = 0.25,
) -> list[LimitCyclePoint]:
    """Limit-cycle amplitudes and periods by long integration past a Hopf point.

    Each sampled parameter value is integrated from a perturbed coexistence
    state; the stabilised oscillation is summarised by the mean of the last
    ``n_average`` peak (and trough) values, flagged unconverged when their
    spread exceeds ``spread_tol``.  The tiny default ``abs_tol`` keeps error
    control relative through the deep inter-spike troughs of v and i, whose
    sign must not flip (the positive cone is repelling once u has regrown).
    A reported blow-up yields a NaN, unconverged entry.
    """
    from .integrate import IntegrationError

    results = []
    for value in values:
        pq = p.replace(**{parameter: value})
        eq = coexistence_equilibrium(pq)
        if eq is None:
            raise ValueError(f"no coexistence equilibrium at {parameter} = {value}")
        u0 = min(eq.state.u + 0.1, 0.99)
        cfg = IntegrationConfig(t_start=0.0, t_end=t_end, rel_tol=rel_tol,
                                abs_tol=abs_tol, dense_output_stride=stride)
        try:
            traj = integrate(pq, State3(u0, eq.state.v, eq.state.i), cfg)
        except IntegrationError:
            results.append(LimitCyclePoint(value, math.nan, math.nan,
                                           math.nan, False))
            continue
        t_discard = discard_fraction * t_end
        peaks = detect_peaks(traj, "u", t_discard)
        troughs = [(t, -v) for t, v in
                   series_peaks(traj.times, -traj.u, t_discard)]
        if len(peaks) < 2:
            results.append(LimitCyclePoint(value, math.nan, math.nan,
                                           math.nan, False))
            continue
        tail = peaks[-n_average:]
        peak_vals = np.array([v for _, v in tail])
        peak_times = np.array([t for t, _ in tail])
        trough_vals = np.array([v for _, v in troughs[-n_average:]])
        converged = (len(peaks) >= n_average
                     and float(np.ptp(peak_vals)) < spread_tol)
        period = float(np.mean(np.diff(peak_times))) if len(tail) > 1 else math.nan
        results.append(LimitCyclePoint(
            param_value=value,
            u_max=float(np.mean(peak_vals)),
            u_min=float(np.mean(trough_vals)) if trough_vals.size else math.nan,
            period=period,
            converged=bool(converged),
        ))
    return results


@dataclass(frozen=True)
class HopfCurve:
    """Hopf locations in the (delta_v, delta_i) plane at fixed infectivity."""

    beta: float
    points: tuple[tuple[float, float], ...]  # (delta_v, delta_i), ordered in delta_i
    axis_intersections: tuple[float, ...]    # delta_i values where delta_v -> 0
    gaps: tuple[float, ...] = ()             # delta_i grid lines with no Hopf

    def enclosed_area(self) -> float:
        """Shoelace area between the curve and the delta_i axis."""
        if len(self.points) < 2:
            return 0.0
        xs = np.array([dv for dv, _ in self.points])
        ys = np.array([di for _, di in self.points])
        # Close the polygon along the delta_v = 0 axis.
        xs = np.concatenate([xs, [0.0, 0.0]])
        ys = np.concatenate([ys, [ys[-1], ys[0]]])
        return 0.5 * abs(float(np.dot(xs, np.roll(ys, -1)) - np.dot(ys, np.roll(xs, -1))))

    def delta_v_at(self, delta_i: float) -> float:
        """Curve height interpolated at one delta_i."""
        ys = np.array([di for _, di in self.points])
        xs = np.array([dv for dv, _ in self.points])
        if not ys[0] <= delta_i <= ys[-1]:
            raise ValueError("delta_i outside the traced curve")
        return float(np.interp(delta_i, ys, xs))

    def delta_i_crossings(self, delta_v: float) -> list[float]:
        """delta_i values where the curve crosses a horizontal delta_v line."""
        xs = np.array([dv for dv, _ in self.points])
        ys = np.array([di for _, di in self.points])
        out = []
        for j in range(xs.size - 1):
            a, b = xs[j] - delta_v, xs[j + 1] - delta_v
            if a == 0.0:
                out.append(float(ys[j]))
            elif a * b < 0.0:
                w = a / (a - b)
                out.append(float(ys[j] + w * (ys[j + 1] - ys[j])))
        return out


def _pair_real_at(p: ModelParams, **overrides: float) -> float | None:
    eq = coexistence_equilibrium(p.replace(**overrides))
    if eq is None or not eq.biological:
        return None
    pair = eq.eigen.complex_pair()
    return None if pair is None else pair[0].real


def hopf_curve_2param(
    p: ModelParams,
    beta_values: Sequence[float],
    *,
    delta_i_grid: np.ndarray | None = None,
    scan_floor: float = 1e-6,
    scan_points: int = 60,
) -> list[HopfCurve]:
    """Two-parameter Hopf curves: march delta_i, bisect the Hopf delta_v.

    Each curve leaves and re-enters the delta_i axis; the Hopf value of
    delta_v shrinks to zero at two boundary values of delta_i, located here
    by bisecting the existence of the delta_v crossing.  The upper one is
    the infected-cell death rate above which even a non-decaying virus
    oscillates no more.
    """
    if delta_i_grid is None:
        delta_i_grid = np.geomspace(5e-3, 9.5, 61)
    curves = []
    for beta in beta_values:
        dv_cap = 0.999 * beta * (p.alpha - 1.0)  # coexistence turns non-biological beyond

        def hopf_dv(di: float) -> float | None:
            scan = np.geomspace(scan_floor, dv_cap, scan_points)
            vals = [_pair_real_at(p, beta=beta, delta_i=di, delta_v=dv)
                    for dv in scan]
            for j in range(len(scan) - 1):
                a, b = vals[j], vals[j + 1]
                if a is None or b is None:
                    continue
                if a > 0.0 >= b or (a == 0.0 and b < 0.0):
                    return refine_crossing(
                        lambda dv: _pair_real_at(p, beta=beta, delta_i=di, delta_v=dv),
                        scan[j], scan[j + 1], g_tol=EVENT_RE_TOL)
            return None

        points: list[tuple[float, float]] = []
        gaps: list[float] = []
        for di in delta_i_grid:
            dv = hopf_dv(float(di))
            if dv is None:
                gaps.append(float(di))
            else:
                points.append((dv, float(di)))

        def existence_boundary(inside: float, outside: float) -> float:
            for _ in range(50):
                mid = math.sqrt(inside * outside)  # log-midpoint
                if hopf_dv(mid) is None:
                    outside = mid
                else:
                    inside = mid
                if abs(outside - inside) <= 1e-9 * max(1.0, abs(inside)):
                    break
            return inside

        crossings: list[float] = []
        if points:
            di_first, di_last = points[0][1], points[-1][1]
            lower_out = next((g for g in sorted(gaps, reverse=True) if g < di_first),
                             di_first / 1e3)
            if hopf_dv(lower_out) is None:
                crossings.append(existence_boundary(di_first, lower_out))
            else:
                crossings.append(0.0)  # curve runs into the origin
            upper_out = next((g for g in sorted(gaps) if g > di_last), None)
            if upper_out is None:
                # The curve extends past the marching grid; hunt outward.
                upper_out = di_last * 2.0
                while hopf_dv(upper_out) is not None and upper_out < 1e4:
                    upper_out *= 2.0
            crossings.append(existence_boundary(di_last, upper_out))
        curves.append(HopfCurve(
            beta=float(beta),
            points=tuple(points),
            axis_intersections=tuple(sorted(crossings)),
            gaps=tuple(gaps),
        ))
    return curves
