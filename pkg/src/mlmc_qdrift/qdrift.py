"""Single-level qDRIFT: sequence sampling, trajectories, the averaged channel,
and the bias/cost model of the standard protocol.

A qDRIFT circuit of depth N for time t draws N term indices i.i.d. with
probability p_j = |h_j| / lambda and applies exp(-i * sign(h_j) * tau * P_j)
with step size tau = lambda * t / N (the step size absorbs the one-norm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hamiltonian import Hamiltonian, Observable
from .pauli import DensityMatrix, StateVector
from .rng import RngStream

IndexSequence = np.ndarray  # int64 array of term indices in [0, M)


@dataclass(frozen=True)
class QDriftConfig:
    """Depth/step bookkeeping for one qDRIFT run: tau * N == lambda * t."""

    t: float
    n_gates: int
    tau: float

    @classmethod
    def for_hamiltonian(cls, hamiltonian: Hamiltonian, t: float, n_gates: int) -> "QDriftConfig":
        if n_gates < 1:
            raise ValueError("gate count must be positive")
        return cls(t=t, n_gates=n_gates, tau=hamiltonian.one_norm * t / n_gates)


def sample_sequence(rng: RngStream, hamiltonian: Hamiltonian, n_gates: int) -> IndexSequence:
    """Draw ``n_gates`` i.i.d. term indices by inverse CDF on the cumulative table."""
    if n_gates < 1:
        raise ValueError("sequence length must be at least 1")
    u = rng.generator().random(n_gates)
    idx = np.searchsorted(hamiltonian.cumulative, u, side="right")
    return np.minimum(idx, hamiltonian.num_terms - 1).astype(np.int64)


def run_trajectory(
    hamiltonian: Hamiltonian,
    seq: IndexSequence,
    tau: float,
    psi0: StateVector,
) -> StateVector:
    """Apply exp(-i * sign(h_jk) * tau * P_jk) for each index in order."""
    if tau <= 0:
        raise ValueError("step size must be positive")
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size and (seq.min() < 0 or seq.max() >= hamiltonian.num_terms):
        raise IndexError(f"term index out of range for {hamiltonian.num_terms} terms")
    perms, coeffs, signs = hamiltonian.gate_tables()
    c = math.cos(tau)
    s = math.sin(tau)
    psi = np.asarray(psi0, dtype=complex)
    for j in seq:
        psi = c * psi - (1j * signs[j] * s) * (coeffs[j] * psi[perms[j]])
    return psi


class ChannelKernel:
    """One step of the averaged qDRIFT channel, precomputed for a fixed (H, tau).

    step(rho) = sum_j p_j exp(-i sign_j tau P_j) rho exp(+i sign_j tau P_j).
    Each term's closed-form conjugation (cos^2 rho + sin^2 P rho P
    - i sin cos [P, rho]) is a phase-weighted gather of rho entries, so the
    whole sum collapses into one flat gather against precomputed indices and
    weights.  The reduction order is fixed, making iteration bitwise
    deterministic.
    """

    def __init__(self, hamiltonian: Hamiltonian, tau: float):
        if tau < 0:
            raise ValueError("step size must be nonnegative")
        perms, coeffs, signs = hamiltonian.gate_tables()
        d = hamiltonian.dim
        c, s = math.cos(tau), math.sin(tau)
        self.cos_sq = c * c
        idx = np.arange(d, dtype=np.int64)
        gather = []
        weights = []
        for m in range(hamiltonian.num_terms):
            perm = perms[m]
            phase_out = coeffs[m]            # multiplies psi[perm[i]] in P|psi>
            phase_in = phase_out[perm]       # the matching input-side phase
            w_cross = 1j * s * c * hamiltonian.probs[m] * signs[m]
            # sin^2 * P rho P: entry (i, j) reads rho[perm[i], perm[j]]
            gather.append((perm[:, None] * d + perm[None, :]).ravel())
            weights.append(
                (s * s * hamiltonian.probs[m]) * (phase_out[:, None] * phase_in[None, :]).ravel()
            )
            # -i sin cos * P rho: entry (i, j) reads rho[perm[i], j]
            gather.append((perm[:, None] * d + idx[None, :]).ravel())
            weights.append(np.broadcast_to(-w_cross * phase_out[:, None], (d, d)).ravel())
            # +i sin cos * rho P: entry (i, j) reads rho[i, perm[j]]
            gather.append((idx[:, None] * d + perm[None, :]).ravel())
            weights.append(np.broadcast_to(w_cross * phase_in[None, :], (d, d)).ravel())
        self.dim = d
        self.gather = np.stack(gather)
        self.weights = np.stack([np.asarray(w, dtype=complex) for w in weights])

    def step(self, rho: DensityMatrix) -> DensityMatrix:
        flat = np.ascontiguousarray(rho, dtype=complex).reshape(-1)
        mixed = (self.weights * flat[self.gather]).sum(axis=0)
        return self.cos_sq * rho + mixed.reshape(self.dim, self.dim)


def averaged_channel_step(hamiltonian: Hamiltonian, tau: float, rho: DensityMatrix) -> DensityMatrix:
    """sum_j p_j exp(-i sign_j tau P_j) rho exp(+i sign_j tau P_j)."""
    return ChannelKernel(hamiltonian, tau).step(rho)


def iterate_channel(
    hamiltonian: Hamiltonian, tau: float, rho0: DensityMatrix, n_steps: int
) -> DensityMatrix:
    """N-fold composition of the averaged channel applied to ``rho0``."""
    kernel = ChannelKernel(hamiltonian, tau)
    rho = np.asarray(rho0, dtype=complex)
    for _ in range(n_steps):
        rho = kernel.step(rho)
    return rho


def observable_trace(observable: Observable, rho: DensityMatrix) -> float:
    """Tr(O rho) for a Pauli observable, via a single diagonal gather."""
    perm, coeff = observable.pauli.action_tables()
    return float(np.sum(coeff * rho[np.arange(rho.shape[0]), perm]).real)


def channel_probability(
    hamiltonian: Hamiltonian,
    observable: Observable,
    rho0: DensityMatrix,
    n_gates: int,
    t: float,
) -> float:
    """Probability of the +1 outcome, Tr((I + O)/2 * rho_N), after N channel steps."""
    tau = hamiltonian.one_norm * t / n_gates
    rho = iterate_channel(hamiltonian, tau, rho0, n_gates)
    p = 0.5 * (1.0 + observable_trace(observable, rho))
    return min(1.0, max(0.0, p))


def bias_bound(one_norm: float, t: float, n_gates: int) -> float:
    """Diamond-norm bias bound 2 * lambda^2 * t^2 / N of the averaged channel."""
    if n_gates < 1:
        raise ValueError("gate count must be positive")
    return 2.0 * (one_norm * t) ** 2 / n_gates


def std_cost(eps: float, bias_constant: float, sigma2: float) -> tuple[int, int, int]:
    """Standard qDRIFT budget: depth from the bias, samples from the variance.

    Returns (N_std, n_std, total gates) with N_std = ceil(sqrt(2)*B/eps) and
    n_std = ceil(2*sigma^2/eps^2); the total is their product.
    """
    if eps <= 0 or bias_constant <= 0 or sigma2 < 0:
        raise ValueError("need eps > 0, bias constant > 0, sigma2 >= 0")
    n_depth = math.ceil(math.sqrt(2.0) * bias_constant / eps)
    n_samples = math.ceil(2.0 * sigma2 / eps**2) if sigma2 > 0 else 1
    return n_depth, n_samples, n_depth * n_samples
