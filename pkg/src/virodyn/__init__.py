"""Oncolytic virotherapy dynamics: reaction-diffusion simulation, the reduced
well-mixed model, and bifurcation continuation."""

from .params import ModelParams, table1
from .model import (
    State3,
    rhs_ode,
    jacobian_ode,
    beta_star,
    coexistence_equilibrium,
    other_root_equilibrium,
    immortal_virus_equilibrium_eigenvalues,
)
from .eigen import Eigentriple, Stability, eigensolve_3x3
from .integrate import IntegrationConfig, Trajectory, integrate, detect_peaks
from .bifurcation import (
    Branch,
    BifurcationEvent,
    EquilibriumPoint,
    HopfCurve,
    continue_branch,
    hopf_curve_2param,
    limit_cycle_branch,
    newton_equilibrium,
    refine_hopf,
)
from .pde import (
    PdeRunConfig,
    RadialField,
    RadialGrid,
    front_position,
    initial_condition,
    oscillation_monitor,
    run_pde,
    spherical_laplacian,
    tail_density,
    total_cells,
    tumour_volume,
    wave_speed,
)
from .calibration import CalibrationInputs, calibration_report, derived_params

__version__ = "0.1.0"
