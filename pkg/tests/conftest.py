import numpy as np
import pytest

from mlmc_qdrift import (
    Hamiltonian,
    HamiltonianTerm,
    Observable,
    PauliString,
    basis_state,
    build_heisenberg_xyz,
)
from mlmc_qdrift.experiments import ExperimentConfig, fig1_variance_mean_decay

SESSION_SEED = 20250809


@pytest.fixture(scope="session")
def heisenberg() -> Hamiltonian:
    return build_heisenberg_xyz(6, 1.0, 0.5, 0.8)


@pytest.fixture(scope="session")
def z0() -> Observable:
    return Observable(PauliString("ZIIIII"))


@pytest.fixture(scope="session")
def heisenberg_cfg(heisenberg, z0) -> ExperimentConfig:
    return ExperimentConfig(hamiltonian=heisenberg, observable=z0, seed=SESSION_SEED)


@pytest.fixture(scope="session")
def fig1_result(heisenberg_cfg):
    """Exact-channel sweep over all eight levels; computed once per session."""
    return fig1_variance_mean_decay(heisenberg_cfg)


@pytest.fixture(scope="session")
def two_term_2q() -> Hamiltonian:
    """Two noncommuting terms with equal weights (exhaustive-enumeration toy)."""
    return Hamiltonian([
        HamiltonianTerm(1.0, PauliString("XI")),
        HamiltonianTerm(1.0, PauliString("ZZ")),
    ])


@pytest.fixture(scope="session")
def two_term_2q_signed() -> Hamiltonian:
    """Unequal weights and a negative coefficient, for sign handling."""
    return Hamiltonian([
        HamiltonianTerm(1.0, PauliString("XY")),
        HamiltonianTerm(-0.6, PauliString("ZI")),
    ])


@pytest.fixture(scope="session")
def z_first_2q() -> Observable:
    return Observable(PauliString("ZI"))


@pytest.fixture()
def nprng() -> np.random.Generator:
    return np.random.default_rng(SESSION_SEED)
