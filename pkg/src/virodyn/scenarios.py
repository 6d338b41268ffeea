"""Config-driven scenario execution: named batch runs writing CSV + SVG.

A YAML config declares a list of scenarios, each with a kind, optional
parameter overrides (applied to the baseline table), and kind-specific
options.  All numeric output uses scientific notation with nine significant
digits and no timestamps, so reruns are byte-identical; every scenario also
writes a manifest listing the fully resolved parameters and sha256 hashes of
its artifacts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import yaml

from . import calibration
from .bifurcation import (
    Branch,
    continue_branch,
    hopf_curve_2param,
    limit_cycle_branch,
    newton_equilibrium,
)
from .integrate import IntegrationConfig, integrate
from .model import State3, coexistence_equilibrium
from .params import ModelParams, table1
from .pde import (
    default_run_config,
    front_position,
    oscillation_monitor,
    run_pde,
    tumour_volume,
    wave_speed,
)

KINDS = (
    "pde_snapshot",
    "pde_sweep",
    "ode_run",
    "branch",
    "limit_cycle_branch",
    "hopf_curve",
    "calibration_report",
    "pde_vs_ode",
)


class ConfigError(ValueError):
    pass


class ScenarioFailure(RuntimeError):
    """Numeric failure inside a scenario, with its name for context."""


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    overrides: dict[str, float]
    options: dict

    def resolve_params(self) -> ModelParams:
        try:
            return table1(**self.overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"scenario {self.name!r}: {exc}") from exc


_PARAM_FIELDS = {f.name for f in dataclasses.fields(ModelParams)}


def load_config(path: str | Path) -> list[Scenario]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = (f" (line {mark.line + 1}, column {mark.column + 1})"
                 if mark is not None else "")
        raise ConfigError(f"{path}: YAML parse failure{where}: {exc}") from exc
    if not isinstance(raw, dict) or "scenarios" not in raw:
        raise ConfigError(f"{path}: expected a mapping with a 'scenarios' list")
    entries = raw["scenarios"]
    if not isinstance(entries, list):
        raise ConfigError(f"{path}: 'scenarios' must be a list")

    scenarios: list[Scenario] = []
    seen: set[str] = set()
    for idx, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: scenario #{idx} is not a mapping")
        name = entry.get("name")
        kind = entry.get("kind")
        if not isinstance(name, str) or not name:
            raise ConfigError(f"{path}: scenario #{idx} needs a name")
        if name in seen:
            raise ConfigError(f"{path}: duplicate scenario name {name!r}")
        seen.add(name)
        if kind not in KINDS:
            raise ConfigError(f"{path}: scenario {name!r} has unknown kind "
                              f"{kind!r}; expected one of {', '.join(KINDS)}")
        overrides = entry.get("params", {}) or {}
        if not isinstance(overrides, dict):
            raise ConfigError(f"{path}: scenario {name!r}: params must map "
                              "field names to numbers")
        unknown = set(overrides) - _PARAM_FIELDS
        if unknown:
            raise ConfigError(f"{path}: scenario {name!r}: unknown parameter "
                              f"key(s) {sorted(unknown)}")
        options = {k: v for k, v in entry.items()
                   if k not in ("name", "kind", "params")}
        scenarios.append(Scenario(name=name, kind=kind,
                                  overrides=dict(overrides), options=options))
    return scenarios


# --- deterministic output helpers -----------------------------------------

def format_number(x) -> str:
    """Scientific notation, nine significant digits, locale independent."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    xf = float(x)
    if math.isnan(xf):
        return "nan"
    return f"{xf:.8e}"


def write_csv(path: Path, header: Sequence[str],
              rows: Iterable[Sequence]) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            cell if isinstance(cell, str) else format_number(cell)
            for cell in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out: Path, scenario: Scenario, params: ModelParams,
                    artifacts: list[Path]) -> Path:
    manifest = {
        "scenario": scenario.name,
        "kind": scenario.kind,
        "params": params.asdict(),
        "options": scenario.options,
        "outputs": {p.name: _sha256(p) for p in sorted(artifacts)},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _plot(out: Path, name: str, draw: Callable) -> Path:
    """Render one SVG; plots are a convenience, never load-bearing."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": name}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        draw(ax)
        path = out / f"{name}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def _branch_rows(branch: Branch):
    for pt in branch.points:
        l1, l2, l3 = pt.eigen.values
        yield (pt.param_value, pt.state.u, pt.state.v, pt.state.i,
               l1.real, l1.imag, l2.real, l2.imag, l3.real, l3.imag,
               1 if pt.stable else 0)


BRANCH_HEADER = ["param", "u", "v", "i", "re_l1", "im_l1", "re_l2", "im_l2",
                 "re_l3", "im_l3", "stable"]
EVENTS_HEADER = ["kind", "param", "u", "v", "i"]
OBSERVABLES_HEADER = ["t_days", "total_u", "total_i", "total_v",
                      "front_u_mm", "tail_u"]


def _observables_rows(res):
    obs = res.observables
    for k in range(obs.times.size):
        yield (obs.times[k], obs.total_u[k], obs.total_i[k], obs.total_v[k],
               obs.front_u[k], obs.tail_u[k])


# --- scenario executors ----------------------------------------------------

def _opt(scenario: Scenario, key: str, default=None, required: bool = False):
    if required and key not in scenario.options:
        raise ConfigError(f"scenario {scenario.name!r} needs option {key!r}")
    return scenario.options.get(key, default)


def _run_calibration_report(scenario: Scenario, params: ModelParams,
                            out: Path) -> list[Path]:
    raw = _opt(scenario, "inputs", {}) or {}
    try:
        inputs = calibration.CalibrationInputs(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario {scenario.name!r}: bad calibration "
                          f"inputs: {exc}") from exc
    path = out / "calibration_report.txt"
    path.write_text(calibration.calibration_report(inputs))
    return [path]


def _run_ode(scenario: Scenario, params: ModelParams, out: Path) -> list[Path]:
    t_end = float(_opt(scenario, "t_end", 100.0))
    stride = float(_opt(scenario, "stride", 0.1))
    parameter = _opt(scenario, "parameter")
    values = _opt(scenario, "values", [None])
    artifacts = []
    for value in values:
        p = params if value is None else params.replace(**{parameter: value})
        eq = coexistence_equilibrium(p)
        default_init = [p.u0, p.v0, 0.0]
        init = _opt(scenario, "initial", default_init)
        cfg = IntegrationConfig(
            t_start=0.0, t_end=t_end,
            rel_tol=float(_opt(scenario, "rel_tol", 1e-9)),
            abs_tol=float(_opt(scenario, "abs_tol", 1e-14)),
            dense_output_stride=stride,
        )
        traj = integrate(p, State3(*init), cfg)
        suffix = "" if value is None else f"_{parameter}_{format_number(value)}"
        artifacts.append(write_csv(
            out / f"trajectory{suffix}.csv", ["t_days", "u", "v", "i"],
            zip(traj.times, traj.u, traj.v, traj.i)))

        def draw(ax, traj=traj, p=p, eq=eq):
            ax.plot(traj.times, traj.u, label="u")
            ax.plot(traj.times, traj.i, label="i")
            if eq is not None and eq.biological:
                ax.axhline(eq.state.u, ls="--", lw=0.8, color="grey")
            ax.set_xlabel("t [days]")
            ax.set_ylabel("scaled density")
            ax.legend()

        artifacts.append(_plot(out, f"trajectory{suffix}", draw))
    return artifacts


def _branch_start(params: ModelParams, parameter: str, lo: float, start: str):
    p_lo = params.replace(**{parameter: lo})
    if start == "trivial":
        return newton_equilibrium(p_lo, State3(1.0, 0.0, 0.0), parameter)
    eq = coexistence_equilibrium(p_lo)
    if eq is None:
        raise ScenarioFailure(f"no coexistence equilibrium at {parameter}={lo}")
    return newton_equilibrium(p_lo, eq.state, parameter)


def _run_branch(scenario: Scenario, params: ModelParams, out: Path) -> list[Path]:
    parameter = _opt(scenario, "parameter", required=True)
    lo, hi = (float(x) for x in _opt(scenario, "range", required=True))
    start = _opt(scenario, "start", "coexistence")
    if start not in ("coexistence", "trivial"):
        raise ConfigError(f"scenario {scenario.name!r}: start must be "
                          "'coexistence' or 'trivial'")
    branch = continue_branch(params, parameter, (lo, hi),
                             _branch_start(params, parameter, lo, start))
    artifacts = [
        write_csv(out / "branch.csv", BRANCH_HEADER, _branch_rows(branch)),
        write_csv(out / "events.csv", EVENTS_HEADER,
                  ((e.kind, e.param_value, e.state.u, e.state.v, e.state.i)
                   for e in branch.events)),
    ]

    def draw(ax):
        q = branch.param_values()
        u = np.array([pt.state.u for pt in branch.points])
        stable = np.array([pt.stable for pt in branch.points])
        ax.plot(q[stable], u[stable], ".", ms=2, label="stable")
        ax.plot(q[~stable], u[~stable], ".", ms=2, color="0.6", label="unstable")
        for e in branch.events:
            ax.axvline(e.param_value, color="r", lw=0.6)
        ax.set_xlabel(parameter)
        ax.set_ylabel("u")
        ax.legend()

    artifacts.append(_plot(out, "branch", draw))
    return artifacts


def _run_limit_cycles(scenario: Scenario, params: ModelParams,
                      out: Path) -> list[Path]:
    parameter = _opt(scenario, "parameter", required=True)
    values = [float(v) for v in _opt(scenario, "values", required=True)]
    t_end = float(_opt(scenario, "t_end", 4000.0))
    points = limit_cycle_branch(params, parameter, values, t_end=t_end)
    artifacts = [write_csv(
        out / "limit_cycles.csv",
        ["param", "u_max", "u_min", "period", "converged"],
        ((pt.param_value, pt.u_max, pt.u_min, pt.period,
          1 if pt.converged else 0) for pt in points))]

    def draw(ax):
        ax.plot([pt.param_value for pt in points],
                [pt.u_max for pt in points], "o-", label="u max")
        ax.plot([pt.param_value for pt in points],
                [pt.u_min for pt in points], "o-", label="u min")
        ax.set_xlabel(parameter)
        ax.set_ylabel("u extrema")
        ax.legend()

    artifacts.append(_plot(out, "limit_cycles", draw))
    return artifacts


def _run_hopf_curve(scenario: Scenario, params: ModelParams,
                    out: Path) -> list[Path]:
    beta_values = [float(b) for b in _opt(scenario, "beta_values", required=True)]
    curves = hopf_curve_2param(params, beta_values)
    rows = []
    for curve in curves:
        rows.extend((curve.beta, dv, di) for dv, di in curve.points)
    artifacts = [
        write_csv(out / "hopf_curves.csv", ["beta", "delta_v", "delta_i"], rows),
        write_csv(out / "axis_intersections.csv",
                  ["beta", "delta_i_low", "delta_i_high"],
                  ((c.beta, c.axis_intersections[0], c.axis_intersections[-1])
                   for c in curves if len(c.axis_intersections) >= 2)),
    ]

    def draw(ax):
        for curve in curves:
            xs = [dv for dv, _ in curve.points]
            ys = [di for _, di in curve.points]
            ax.plot(xs, ys, label=f"beta={curve.beta:g}")
        ax.set_xlabel("delta_v")
        ax.set_ylabel("delta_i")
        ax.set_yscale("log")
        ax.legend()

    artifacts.append(_plot(out, "hopf_curves", draw))
    return artifacts


def _pde_config(scenario: Scenario, params: ModelParams, t_end: float):
    return default_run_config(
        params,
        t_end,
        snapshot_times=[float(t) for t in _opt(scenario, "snapshot_times", [t_end])],
        dr=float(_opt(scenario, "dr", 0.05)),
        length=_opt(scenario, "length"),
        rel_tol=float(_opt(scenario, "rel_tol", 1e-6)),
        abs_tol=float(_opt(scenario, "abs_tol", 1e-9)),
        observable_stride=float(_opt(scenario, "stride", 0.5)),
        probe_r=_opt(scenario, "probe_r"),
    )


def _run_pde_snapshot(scenario: Scenario, params: ModelParams,
                      out: Path) -> list[Path]:
    t_end = float(_opt(scenario, "t_end", 40.0))
    cfg = _pde_config(scenario, params, t_end)
    res = run_pde(params, cfg)
    artifacts = []
    for snap in res.snapshots:
        artifacts.append(write_csv(
            out / f"snapshot_t{snap.time:g}.csv", ["r_mm", "u", "v", "i"],
            zip(snap.grid.r, snap.u, snap.v, snap.i)))
    artifacts.append(write_csv(out / "observables.csv", OBSERVABLES_HEADER,
                               _observables_rows(res)))
    if res.probe_u is not None:
        artifacts.append(write_csv(out / "probe.csv", ["t_days", "u_probe"],
                                   zip(res.observables.times, res.probe_u)))
    if _opt(scenario, "volume_series", False):
        fronts = []
        for snap in res.snapshots:
            toe = front_position(snap, "u", 0.01, relative=True)
            fronts.append((snap.time, toe if toe is not None else math.nan,
                           tumour_volume(toe) if toe is not None else math.nan))
        artifacts.append(write_csv(out / "volume.csv",
                                   ["t_days", "front_toe_mm", "volume_mm3"],
                                   fronts))

    def draw(ax):
        snap = res.snapshots[-1]
        ax.plot(snap.grid.r, snap.u, label="u")
        ax.plot(snap.grid.r, snap.i, label="i")
        ax.plot(snap.grid.r, snap.v / max(1.0, snap.v.max()),
                label="v (rescaled)", ls=":")
        ax.set_xlabel("r [mm]")
        ax.set_ylabel("scaled density")
        ax.legend()

    artifacts.append(_plot(out, "profiles", draw))
    return artifacts


def _run_pde_sweep(scenario: Scenario, params: ModelParams,
                   out: Path) -> list[Path]:
    parameter = _opt(scenario, "parameter", required=True)
    values = [float(v) for v in _opt(scenario, "values", required=True)]
    measure = _opt(scenario, "measure", "wave_speed")
    if measure not in ("wave_speed", "totals"):
        raise ConfigError(f"scenario {scenario.name!r}: measure must be "
                          "'wave_speed' or 'totals'")
    t_end = float(_opt(scenario, "t_end", 40.0))
    artifacts = []
    summary = []
    for value in values:
        p = params.replace(**{parameter: value})
        cfg = _pde_config(scenario, p, t_end)
        res = run_pde(p, cfg)
        if measure == "wave_speed":
            window = _opt(scenario, "fit_window", [t_end / 4.0, t_end])
            positions = []
            for snap_t, field in ((s.time, s) for s in res.snapshots):
                pos = front_position(field, "v", 0.01, relative=True)
                positions.append((snap_t, math.nan if pos is None else pos))
            # front series from observables is for u; track the virus front
            # through snapshot times instead, so ask for dense snapshots.
            if len(positions) < 3:
                raise ConfigError(
                    f"scenario {scenario.name!r}: wave_speed needs >= 3 "
                    "snapshot_times to fit the virus front")
            speed = wave_speed(positions, (float(window[0]), float(window[1])))
            summary.append((value, speed))
        else:
            series_path = write_csv(
                out / f"totals_{parameter}_{format_number(value)}.csv",
                ["t_days", "total_u", "total_i"],
                zip(res.observables.times, res.observables.total_u,
                    res.observables.total_i))
            artifacts.append(series_path)
            summary.append((value, res.observables.min_tumour_cells()))
    header = (["param", "speed_mm_day"] if measure == "wave_speed"
              else ["param", "min_tumour_cells"])
    artifacts.append(write_csv(out / "sweep.csv", header, summary))

    def draw(ax):
        xs = [row[0] for row in summary]
        ys = [row[1] for row in summary]
        ax.plot(xs, ys, "o-")
        ax.set_xlabel(parameter)
        ax.set_ylabel(header[1])

    artifacts.append(_plot(out, "sweep", draw))
    return artifacts


def _run_pde_vs_ode(scenario: Scenario, params: ModelParams,
                    out: Path) -> list[Path]:
    parameter = _opt(scenario, "parameter", required=True)
    values = [float(v) for v in _opt(scenario, "values", required=True)]
    t_end = float(_opt(scenario, "t_end", 400.0))
    window = float(_opt(scenario, "oscillation_window", t_end / 4.0))
    rows = []
    for value in values:
        p = params.replace(**{parameter: value})
        cfg = _pde_config(scenario, p, t_end)
        res = run_pde(p, cfg)
        obs = res.observables
        tail = float(obs.tail_u[-1])
        verdict = oscillation_monitor(obs.times, obs.tail_u, window)
        eq = coexistence_equilibrium(p)
        if eq is not None and eq.biological:
            expected = eq.state.u
        else:
            expected = 1.0  # treatment fails: back to carrying capacity
        rows.append((value, tail, expected, verdict.kind,
                     1 if verdict.confident else 0))
    artifacts = [write_csv(
        out / "pde_vs_ode.csv",
        ["param", "tail_u", "equilibrium_u", "oscillation", "confident"],
        rows)]

    def draw(ax):
        xs = [r[0] for r in rows]
        ax.plot(xs, [r[1] for r in rows], "o", label="PDE tail")
        ax.plot(xs, [r[2] for r in rows], "-", label="equilibrium")
        ax.set_xlabel(parameter)
        ax.set_ylabel("u")
        ax.legend()

    artifacts.append(_plot(out, "pde_vs_ode", draw))
    return artifacts


_EXECUTORS: dict[str, Callable[[Scenario, ModelParams, Path], list[Path]]] = {
    "calibration_report": _run_calibration_report,
    "ode_run": _run_ode,
    "branch": _run_branch,
    "limit_cycle_branch": _run_limit_cycles,
    "hopf_curve": _run_hopf_curve,
    "pde_snapshot": _run_pde_snapshot,
    "pde_sweep": _run_pde_sweep,
    "pde_vs_ode": _run_pde_vs_ode,
}


def run_scenario(scenario: Scenario, out_dir: str | Path) -> Path:
    """Execute one scenario into ``out_dir/<name>/``; returns that directory."""
    params = scenario.resolve_params()
    out = Path(out_dir) / scenario.name
    out.mkdir(parents=True, exist_ok=True)
    try:
        artifacts = _EXECUTORS[scenario.kind](scenario, params, out)
    except ConfigError:
        raise
    except Exception as exc:
        raise ScenarioFailure(f"scenario {scenario.name!r} failed: {exc}") from exc
    _write_manifest(out, scenario, params, artifacts)
    return out
