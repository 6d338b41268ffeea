"""Adaptive Dormand-Prince 5(4) integration with dense-output sampling.

One explicit embedded pair serves both the 3-variable well-mixed model and
the method-of-lines system from the PDE discretisation: the stepper operates
on flat numpy arrays and reports accepted/rejected step counts.  Trajectories
are recorded on a fixed stride through the pair's quartic interpolant rather
than at the (adaptive) step points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .model import State3, rhs_array
from .params import ModelParams

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# Difference between the 5th-order solution and the embedded 4th-order one.
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])
# Quartic dense-output coefficients (columns multiply theta, theta^2, ...).
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


class IntegrationError(RuntimeError):
    """Base failure; ``time`` is where integration broke down."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:.6g}")
        self.time = time


class StepUnderflowError(IntegrationError):
    pass


class NonFiniteStateError(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegrationConfig:
    t_start: float = 0.0
    t_end: float = 100.0
    rel_tol: float = 1e-8
    # Deep absolute floor: populations spend long stretches decaying through
    # tiny magnitudes, where an absolute-error regime can flip their sign and
    # leave the (repelling-complement) positive cone.  Relative control keeps
    # decaying exponentials positive all the way to the denormal range.
    abs_tol: float = 1e-14
    max_step: float = math.inf
    dense_output_stride: float = 0.1

    def __post_init__(self) -> None:
        if not (0.0 < self.rel_tol <= 1e-2 and 0.0 < self.abs_tol <= 1e-2):
            raise ValueError("tolerances must lie in (0, 1e-2]")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if not self.dense_output_stride > 0.0:
            raise ValueError("dense_output_stride must be positive")
        if not self.max_step > 0.0:
            raise ValueError("max_step must be positive")

    def sample_times(self) -> np.ndarray:
        """Stride grid over [t_start, t_end] with the endpoint always included."""
        n = int(math.floor((self.t_end - self.t_start) / self.dense_output_stride + 1e-9))
        times = self.t_start + self.dense_output_stride * np.arange(n + 1)
        if self.t_end - times[-1] > 1e-12 * max(1.0, abs(self.t_end)):
            times = np.append(times, self.t_end)
        else:
            times[-1] = self.t_end
        return times


class StepStats(NamedTuple):
    accepted: int
    rejected: int
    rhs_evaluations: int


def _error_norm(err: np.ndarray, scale: np.ndarray) -> float:
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f, t0, y0, f0, t_end, rel_tol, abs_tol, max_step):
    """Hairer-Norsett-Wanner starting step heuristic."""
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = _error_norm(y0, scale)
    d1 = _error_norm(f0, scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0, max_step)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = _error_norm(f1 - f0, scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, t_end - t0, max_step)


def solve_dopri45(
    f: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0: np.ndarray,
    *,
    rel_tol: float,
    abs_tol: float,
    max_step: float = math.inf,
    sample_times: np.ndarray | None = None,
    on_sample: Callable[[float, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, StepStats]:
    """Integrate y' = f(t, y), invoking ``on_sample`` at each requested time.

    Returns the final state and step statistics.  Samples are evaluated with
    the pair's quartic interpolant, so they do not constrain step selection.
    """
    t0, t_end = float(t_span[0]), float(t_span[1])
    y = np.asarray(y0, dtype=float).copy()
    if not np.all(np.isfinite(y)):
        raise NonFiniteStateError("non-finite initial state", t0)

    samples = np.asarray([] if sample_times is None else sample_times, dtype=float)
    if samples.size and (samples[0] < t0 - 1e-12 or samples[-1] > t_end + 1e-12):
        raise ValueError("sample times must lie within the integration span")
    next_sample = 0

    m = y.size
    K = np.empty((7, m))
    K[0] = f(t0, y)
    n_eval = 1
    if not np.all(np.isfinite(K[0])):
        raise NonFiniteStateError("non-finite derivative at initial state", t0)

    # Emit samples that coincide with the start time.
    while (samples.size > next_sample
           and samples[next_sample] <= t0 + 1e-14 * max(1.0, abs(t0))):
        if on_sample is not None:
            on_sample(float(samples[next_sample]), y)
        next_sample += 1

    h = _initial_step(f, t0, y, K[0], t_end, rel_tol, abs_tol, max_step)
    n_eval += 1
    t = t0
    accepted = rejected = 0

    while t < t_end:
        h_min = 16.0 * np.finfo(float).eps * max(abs(t), 1.0)
        if h < h_min:
            raise StepUnderflowError("step size underflow (possible blow-up)", t)
        h = min(h, max_step, t_end - t)

        for i in range(1, 6):
            y_stage = y + h * (_A[i] @ K[:i])
            K[i] = f(t + _C[i] * h, y_stage)
        y_new = y + h * (_B @ K[:6])
        K[6] = f(t + h, y_new)
        n_eval += 6

        if not np.all(np.isfinite(y_new)):
            err = math.inf
        else:
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = _error_norm(h * (_E @ K), scale)

        if err <= 1.0:
            t_new = t + h
            if samples.size > next_sample and samples[next_sample] <= t_new:
                interp = K.T @ _P  # (m, 4) interpolant coefficients for this step
                while (samples.size > next_sample
                       and samples[next_sample] <= t_new + 1e-14 * max(1.0, abs(t_new))):
                    ts = float(samples[next_sample])
                    theta = (ts - t) / h
                    powers = np.array([theta, theta**2, theta**3, theta**4])
                    if on_sample is not None:
                        on_sample(ts, y + h * (interp @ powers))
                    next_sample += 1
            t, y = t_new, y_new
            K[0] = K[6]  # first-same-as-last
            accepted += 1
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err**-0.2)
            h *= max(_MIN_FACTOR, factor)
        else:
            rejected += 1
            if math.isinf(err):
                h *= 0.25
            else:
                h *= max(_MIN_FACTOR, _SAFETY * err**-0.2)

    return y, StepStats(accepted, rejected, n_eval)


@dataclass(frozen=True)
class Trajectory:
    """A sampled solution of the well-mixed model."""

    times: np.ndarray
    states: np.ndarray  # shape (len(times), 3)
    stats: StepStats

    @property
    def u(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def i(self) -> np.ndarray:
        return self.states[:, 2]

    def component(self, which: str | int) -> np.ndarray:
        idx = {"u": 0, "v": 1, "i": 2}[which] if isinstance(which, str) else which
        return self.states[:, idx]

    def final_state(self) -> State3:
        return State3(*self.states[-1])


def integrate(p: ModelParams, s0: State3, cfg: IntegrationConfig) -> Trajectory:
    """Integrate the well-mixed model, sampling on the configured stride."""
    times = cfg.sample_times()
    states = np.empty((times.size, 3))
    cursor = {"n": 0}

    def record(ts: float, ys: np.ndarray) -> None:
        states[cursor["n"]] = ys
        cursor["n"] += 1

    _, stats = solve_dopri45(
        lambda t, y: rhs_array(y, p),
        (cfg.t_start, cfg.t_end),
        np.asarray(s0, dtype=float),
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        max_step=cfg.max_step,
        sample_times=times,
        on_sample=record,
    )
    assert cursor["n"] == times.size
    return Trajectory(times=times, states=states, stats=stats)


def series_peaks(times: np.ndarray, values: np.ndarray,
                 t_discard: float = 0.0) -> list[tuple[float, float]]:
    """Interior local maxima after ``t_discard``, refined by fitting a
    parabola through the three samples around each discrete maximum."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = times >= t_discard
    t, x = times[keep], values[keep]
    if t.size < 3:
        return []
    mask = (x[1:-1] > x[:-2]) & (x[1:-1] >= x[2:])
    peaks = []
    for j in np.nonzero(mask)[0] + 1:
        denom = x[j - 1] - 2.0 * x[j] + x[j + 1]
        if denom >= 0.0:  # flat triple; keep the raw sample
            peaks.append((float(t[j]), float(x[j])))
            continue
        offset = 0.5 * (x[j - 1] - x[j + 1]) / denom
        dt = 0.5 * (t[j + 1] - t[j - 1])
        value = x[j] - 0.25 * (x[j - 1] - x[j + 1]) * offset
        peaks.append((float(t[j] + offset * dt), float(value)))
    return peaks


def detect_peaks(traj: Trajectory, component: str | int = "u",
                 t_discard: float = 0.0) -> list[tuple[float, float]]:
    """Local maxima of one trajectory component after a transient discard."""
    if t_discard >= traj.times[-1]:
        raise ValueError("t_discard must fall inside the trajectory span")
    return series_peaks(traj.times, traj.component(component), t_discard)
