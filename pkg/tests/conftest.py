import pytest

from virodyn.bifurcation import continue_branch, newton_equilibrium
from virodyn.model import coexistence_equilibrium
from virodyn.params import table1


@pytest.fixture(scope="session")
def baseline():
    return table1()


@pytest.fixture(scope="session")
def beta_branch(baseline):
    """Coexistence branch over the published beta window, shared by many tests."""
    p_lo = baseline.replace(beta=0.0012)
    eq = coexistence_equilibrium(p_lo)
    start = newton_equilibrium(p_lo, eq.state, "beta")
    return continue_branch(baseline, "beta", (0.0012, 0.01), start)
