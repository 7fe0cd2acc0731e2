"""Weighted Pauli-sum Hamiltonians, sampling weights, and exact reference evolution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli import (
    DEFAULT_DENSE_CAP,
    PauliString,
    StateVector,
    apply_pauli,
    to_dense,
)


@dataclass(frozen=True)
class HamiltonianTerm:
    """One weighted term h * P.  The sign of ``coeff`` is kept here and folded
    into the rotation angle when gates are applied, so the Pauli itself stays
    sign-free."""

    coeff: float
    pauli: PauliString


@dataclass(frozen=True)
class Observable:
    """A Pauli observable with unit operator norm (exact for Pauli strings)."""

    pauli: PauliString
    norm_bound: float = 1.0


class Hamiltonian:
    """H = sum_j h_j P_j with the derived one-norm and sampling weights.

    Zero-coefficient terms are dropped; all-identity terms are rejected since
    they only contribute a global phase.  Instances are immutable after
    construction and safe to share across workers.
    """

    def __init__(self, terms: list[HamiltonianTerm]):
        kept = [t for t in terms if t.coeff != 0.0]
        if not kept:
            raise ValueError("Hamiltonian needs at least one nonzero term")
        num_qubits = kept[0].pauli.num_qubits
        for t in kept:
            if t.pauli.num_qubits != num_qubits:
                raise ValueError("all terms must act on the same qubit count")
            if t.pauli.is_identity:
                raise ValueError("identity terms are not allowed (global phase only)")
        self.terms: tuple[HamiltonianTerm, ...] = tuple(kept)
        self.num_qubits = num_qubits
        weights = np.array([abs(t.coeff) for t in kept], dtype=float)
        self.one_norm = float(weights.sum())
        self.probs = weights / self.one_norm
        self.cumulative = np.cumsum(self.probs)
        self._signs = np.array([1.0 if t.coeff > 0 else -1.0 for t in kept])
        self._tables = None

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    @property
    def signs(self) -> np.ndarray:
        return self._signs

    def gate_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stacked (perms, coeffs, signs) for fast per-term gate application.

        ``perms`` and ``coeffs`` have shape (M, d): row j gives the action
        tables of term j's Pauli; ``signs`` has shape (M,).
        """
        if self._tables is None:
            perms = np.stack([t.pauli.action_tables()[0] for t in self.terms])
            coeffs = np.stack([t.pauli.action_tables()[1] for t in self.terms])
            self._tables = (perms, coeffs, self._signs)
        return self._tables

    def __repr__(self) -> str:
        return f"Hamiltonian({self.num_terms} terms, {self.num_qubits} qubits, one_norm={self.one_norm})"


def build_heisenberg_xyz(n: int, jx: float, jy: float, jz: float) -> Hamiltonian:
    """Open-chain Heisenberg XYZ model: sum_j Jx X_j X_j+1 + Jy Y_j Y_j+1 + Jz Z_j Z_j+1."""
    if n < 2:
        raise ValueError("chain needs at least 2 qubits")
    terms = []
    for bond in range(n - 1):
        for coeff, letter in ((jx, "X"), (jy, "Y"), (jz, "Z")):
            word = "I" * bond + letter + letter + "I" * (n - bond - 2)
            terms.append(HamiltonianTerm(coeff, PauliString(word)))
    return Hamiltonian(terms)


def sampling_distribution(hamiltonian: Hamiltonian) -> np.ndarray:
    """qDRIFT term-selection probabilities p_j = |h_j| / one_norm."""
    return hamiltonian.probs.copy()


def hamiltonian_to_dense(hamiltonian: Hamiltonian, dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Dense matrix sum_j h_j P_j (test/reference use only)."""
    if hamiltonian.num_qubits > dense_cap:
        raise ValueError(f"{hamiltonian.num_qubits} qubits exceeds dense cap {dense_cap}")
    out = np.zeros((hamiltonian.dim, hamiltonian.dim), dtype=complex)
    for term in hamiltonian.terms:
        out += term.coeff * to_dense(term.pauli, dense_cap)
    return out


def exact_evolution(
    hamiltonian: Hamiltonian,
    t: float,
    psi0: StateVector,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> StateVector:
    """exp(-i H t)|psi0> by eigendecomposition of the dense Hamiltonian."""
    h = hamiltonian_to_dense(hamiltonian, dense_cap)
    energies, modes = np.linalg.eigh(h)
    amplitudes = modes.conj().T @ np.asarray(psi0, dtype=complex)
    return modes @ (np.exp(-1j * energies * t) * amplitudes)


def expectation(observable: Observable, psi: StateVector) -> float:
    """Raw quadratic form <psi|O|psi> (no normalization by <psi|psi>)."""
    return float(np.vdot(psi, apply_pauli(observable.pauli, psi)).real)


def basis_state(num_qubits: int, index: int = 0) -> StateVector:
    """Computational basis state |index> on ``num_qubits`` qubits."""
    psi = np.zeros(1 << num_qubits, dtype=complex)
    psi[index] = 1.0
    return psi
