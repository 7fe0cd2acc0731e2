"""Randomized (qDRIFT) Hamiltonian simulation with multilevel Monte Carlo
variance reduction and a scaled augmented-state measurement construction."""

from .augmented import (
    AugmentedState,
    BlockGenerators,
    BlockObservable,
    block_expectation,
    block_generator_norms,
    build_block_step,
    check_norm_bounds,
    evolve_augmented,
    shot_noise_variance,
    zeta,
)
from .hamiltonian import (
    Hamiltonian,
    HamiltonianTerm,
    Observable,
    basis_state,
    build_heisenberg_xyz,
    exact_evolution,
    expectation,
    sampling_distribution,
)
from .mlmc import (
    AllocationPlan,
    ComplexityModel,
    LevelHierarchy,
    LevelStats,
    choose_finest_level,
    correction_variance_bound,
    coupled_sample,
    crossover_solve,
    mlmc_cost,
    optimal_allocation,
    pilot_variances,
    run_mlmc,
    theorem_cost_bound,
)
from .pauli import (
    PauliString,
    apply_exp_pauli,
    apply_pauli,
    conjugate_exp_pauli,
    to_dense,
)
from .qdrift import (
    QDriftConfig,
    averaged_channel_step,
    bias_bound,
    channel_probability,
    iterate_channel,
    run_trajectory,
    sample_sequence,
    std_cost,
)
from .rng import RngStream

__all__ = [
    "AllocationPlan",
    "AugmentedState",
    "BlockGenerators",
    "BlockObservable",
    "ComplexityModel",
    "Hamiltonian",
    "HamiltonianTerm",
    "LevelHierarchy",
    "LevelStats",
    "Observable",
    "PauliString",
    "QDriftConfig",
    "RngStream",
    "apply_exp_pauli",
    "apply_pauli",
    "averaged_channel_step",
    "basis_state",
    "bias_bound",
    "block_expectation",
    "block_generator_norms",
    "build_block_step",
    "build_heisenberg_xyz",
    "channel_probability",
    "check_norm_bounds",
    "choose_finest_level",
    "conjugate_exp_pauli",
    "correction_variance_bound",
    "coupled_sample",
    "crossover_solve",
    "evolve_augmented",
    "exact_evolution",
    "expectation",
    "iterate_channel",
    "mlmc_cost",
    "optimal_allocation",
    "pilot_variances",
    "run_mlmc",
    "run_trajectory",
    "sample_sequence",
    "sampling_distribution",
    "shot_noise_variance",
    "std_cost",
    "theorem_cost_bound",
    "to_dense",
    "zeta",
]

__version__ = "0.1.0"
