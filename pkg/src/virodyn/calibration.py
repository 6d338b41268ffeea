"""Parameter derivations from the underlying mouse-experiment measurements.

Reproduces the arithmetic that turns doubling time, front displacement,
injection dose, and tumour volume into model constants.  Simulations default
to the rounded baseline values (the published bifurcation numbers were
produced with those); the unrounded chain is available behind a flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import ModelParams, table1


@dataclass(frozen=True)
class CalibrationInputs:
    doubling_time: float = 1.875    # days (about 45 hours)
    initial_radius: float = 2.6     # mm
    final_radius: float = 6.0       # mm
    observation_span: float = 40.0  # days
    dose: float = 1.0e10            # virions per injection
    injection_radius: float = 0.5   # mm
    initial_volume: float = 70.0    # mm^3

    def __post_init__(self) -> None:
        for name in ("doubling_time", "initial_radius", "final_radius",
                     "observation_span", "dose", "injection_radius",
                     "initial_volume"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if not self.final_radius > self.initial_radius:
            raise ValueError("final_radius must exceed initial_radius")


def growth_rate_from_doubling(doubling_time: float) -> float:
    """Exponential growth rate ln(2) / doubling time, 1/day."""
    if not doubling_time > 0.0:
        raise ValueError("doubling time must be positive")
    return math.log(2.0) / doubling_time


def front_speed(inputs: CalibrationInputs) -> float:
    """Mean front speed from the observed radius change, mm/day."""
    return (inputs.final_radius - inputs.initial_radius) / inputs.observation_span


def diffusivity_from_front(inputs: CalibrationInputs, growth_rate: float) -> float:
    """Diffusivity from inverting the pulled-front speed c = 2 sqrt(r D)."""
    if not growth_rate > 0.0:
        raise ValueError("growth rate must be positive")
    c = front_speed(inputs)
    return (c / 2.0) ** 2 / growth_rate


def injection_density(dose: float, radius: float) -> float:
    """Virions per mm^3 when the dose fills a sphere of the given radius."""
    if not radius > 0.0:
        raise ValueError("injection radius must be positive")
    if dose < 0.0:
        raise ValueError("dose must be nonnegative")
    return dose / ((4.0 / 3.0) * math.pi * radius**3)


def radius_from_volume(vol: float) -> float:
    """Invert the ellipsoidal volume estimate 0.523 (2r)^3."""
    if vol < 0.0:
        raise ValueError("volume must be nonnegative")
    return (vol / (0.523 * 8.0)) ** (1.0 / 3.0)


def derived_params(inputs: CalibrationInputs,
                   use_unrounded: bool = False) -> ModelParams:
    """A parameter set backed by the calibration chain.

    With ``use_unrounded`` the self-consistent derived values replace the
    rounded baseline entries (growth rate, diffusivity, injection density,
    initial radius); otherwise the baseline table is returned unchanged.
    """
    if not use_unrounded:
        return table1()
    base = table1()
    r_u = growth_rate_from_doubling(inputs.doubling_time)
    return base.replace(
        r_u=r_u,
        d_u=diffusivity_from_front(inputs, r_u),
        v0=injection_density(inputs.dose, inputs.injection_radius) / base.k,
        r_t=radius_from_volume(inputs.initial_volume),
    )


def calibration_report(inputs: CalibrationInputs) -> str:
    """Plain-text table comparing derived values with the adopted baseline."""
    base = table1()
    r_u = growth_rate_from_doubling(inputs.doubling_time)
    c = front_speed(inputs)
    rows = [
        ("tumour growth rate [1/day]", r_u, base.r_u),
        ("front speed [mm/day]", c, 2.0 * math.sqrt(base.r_u * base.d_u)),
        ("tumour diffusivity [mm^2/day]", diffusivity_from_front(inputs, r_u),
         base.d_u),
        ("injection density [virions/mm^3]",
         injection_density(inputs.dose, inputs.injection_radius),
         base.v0 * base.k),
        ("initial tumour radius [mm]", radius_from_volume(inputs.initial_volume),
         base.r_t),
    ]
    width = max(len(name) for name, _, _ in rows)
    lines = [
        "calibration report",
        "==================",
        f"{'quantity':<{width}}  {'derived':>14}  {'adopted':>14}",
    ]
    for name, derived, adopted in rows:
        lines.append(f"{name:<{width}}  {derived:>14.6e}  {adopted:>14.6e}")
    lines.append("")
    lines.append("inputs: " + ", ".join(
        f"{k}={v!r}" for k, v in sorted(vars(inputs).items())))
    return "\n".join(lines) + "\n"
