"""Model parameters in carrying-capacity-scaled units.

Tumour and virus densities are all scaled by the carrying capacity k, so
``beta`` is the scaled internalisation rate (dimensional rate times k) and
``v0`` is the injected virus density divided by k.  ``k`` itself is kept
only for converting scaled totals back to absolute cell/virion counts.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class ModelParams:
    """Every rate and geometry constant of the model, single source of truth."""

    r_u: float = 0.3        # tumour growth rate, 1/day
    k: float = 1.0e6        # carrying capacity, cells/mm^3 (unit conversion only)
    beta: float = 0.0015    # scaled internalisation rate, 1/(day * scaled virus density)
    alpha: float = 3500.0   # viral burst size, virions per lysed cell
    delta_v: float = 4.0    # virus death rate, 1/day (0 = immortal-virus limit)
    delta_i: float = 1.0    # infected-cell death rate, 1/day
    d_u: float = 0.006      # tumour-cell diffusivity, mm^2/day
    d_v: float = 0.24       # virus diffusivity, mm^2/day
    u0: float = 1.0         # initial uninfected density, fraction of k
    v0: float = 1.9e4       # initial virus density, scaled by k
    r_t: float = 2.6        # initial tumour radius, mm
    r_v: float = 0.5        # virus injection radius, mm
    domain_l: float = 10.0  # maximal tumour radius L, mm

    def __post_init__(self) -> None:
        for name in ("r_u", "k", "beta", "alpha", "delta_i", "r_t", "r_v",
                     "domain_l"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        # Zero is legitimate for these three: delta_v = 0 is the immortal-virus
        # limit and zero diffusivities reduce the PDE to the well-mixed model.
        for name in ("delta_v", "d_u", "d_v"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if self.u0 < 0.0 or self.v0 < 0.0:
            raise ValueError("u0 and v0 must be nonnegative")
        if self.alpha <= 1.0:
            raise ValueError("alpha must exceed 1 (virus must amplify)")
        if not self.r_v <= self.r_t <= self.domain_l:
            raise ValueError("geometry must satisfy r_v <= r_t <= domain_l")

    def replace(self, **overrides: float) -> "ModelParams":
        return dataclasses.replace(self, **overrides)

    def asdict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


def table1(**overrides: float) -> ModelParams:
    """Baseline parameter set; keyword arguments override single fields."""
    return ModelParams(**overrides)
