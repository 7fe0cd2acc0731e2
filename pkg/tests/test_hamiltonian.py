import numpy as np
import pytest

from mlmc_qdrift import (
    Hamiltonian,
    HamiltonianTerm,
    Observable,
    PauliString,
    basis_state,
    build_heisenberg_xyz,
    exact_evolution,
    expectation,
    sampling_distribution,
)
from oracles import dense_hamiltonian_evolution, dense_observable_mean, random_state


class TestBuilder:
    def test_reference_chain(self, heisenberg):
        assert heisenberg.num_terms == 15
        assert heisenberg.one_norm == 11.5

    def test_zero_coefficients_dropped(self):
        h = build_heisenberg_xyz(2, 1.0, 0.0, 0.0)
        assert h.num_terms == 1
        assert h.one_norm == 1.0

    def test_uniform_three_qubits(self):
        h = build_heisenberg_xyz(3, 1.0, 1.0, 1.0)
        assert h.num_terms == 6
        assert h.one_norm == 6.0

    def test_bond_structure(self, heisenberg):
        words = [t.pauli.letters for t in heisenberg.terms]
        assert "XXIIII" in words and "IIIIZZ" in words

    def test_too_short_chain(self):
        with pytest.raises(ValueError):
            build_heisenberg_xyz(1, 1.0, 1.0, 1.0)


class TestHamiltonianInvariants:
    def test_identity_term_rejected(self):
        with pytest.raises(ValueError):
            Hamiltonian([HamiltonianTerm(1.0, PauliString("II"))])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Hamiltonian([HamiltonianTerm(0.0, PauliString("X"))])

    def test_mixed_qubit_counts_rejected(self):
        with pytest.raises(ValueError):
            Hamiltonian([
                HamiltonianTerm(1.0, PauliString("X")),
                HamiltonianTerm(1.0, PauliString("XX")),
            ])

    def test_one_norm_additivity(self, heisenberg, two_term_2q_signed):
        h6 = build_heisenberg_xyz(6, 1.0, 0.5, 0.8)
        combined = Hamiltonian(list(h6.terms) + [
            HamiltonianTerm(0.3, PauliString("XIIIII")),
            HamiltonianTerm(-0.2, PauliString("IYIIII")),
        ])
        assert combined.one_norm == pytest.approx(h6.one_norm + 0.5, abs=1e-12)

    def test_probs_sum_to_one(self, heisenberg):
        assert abs(heisenberg.probs.sum() - 1.0) < 1e-12
        assert np.all(heisenberg.probs > 0)


class TestSamplingDistribution:
    def test_single_term(self):
        h = Hamiltonian([HamiltonianTerm(2.0, PauliString("X"))])
        assert np.array_equal(sampling_distribution(h), [1.0])

    def test_two_terms(self):
        h = Hamiltonian([
            HamiltonianTerm(1.0, PauliString("XI")),
            HamiltonianTerm(3.0, PauliString("ZZ")),
        ])
        assert np.allclose(sampling_distribution(h), [0.25, 0.75])

    def test_reference_chain_weights(self, heisenberg):
        probs = sampling_distribution(heisenberg)
        by_word = {t.pauli.letters: p for t, p in zip(heisenberg.terms, probs)}
        assert by_word["XXIIII"] == pytest.approx(1.0 / 11.5, abs=1e-15)
        assert by_word["YYIIII"] == pytest.approx(0.5 / 11.5, abs=1e-15)
        assert by_word["ZZIIII"] == pytest.approx(0.8 / 11.5, abs=1e-15)


class TestExactEvolution:
    def test_zero_time(self, heisenberg):
        psi0 = basis_state(6)
        assert np.max(np.abs(exact_evolution(heisenberg, 0.0, psi0) - psi0)) < 1e-12

    def test_z_eigenstate(self):
        h = Hamiltonian([HamiltonianTerm(1.0, PauliString("Z"))])
        psi0 = basis_state(1)
        psi_t = exact_evolution(h, 1.7, psi0)
        assert np.allclose(psi_t, [np.exp(-1.7j), 0.0])
        assert expectation(Observable(PauliString("Z")), psi_t) == pytest.approx(1.0, abs=1e-12)

    def test_unitary(self, heisenberg):
        psi_t = exact_evolution(heisenberg, 1.0, basis_state(6))
        assert abs(np.linalg.norm(psi_t) - 1.0) < 1e-10

    def test_matches_dense_oracle(self, two_term_2q_signed, nprng):
        psi0 = random_state(nprng, 2)
        ours = exact_evolution(two_term_2q_signed, 0.9, psi0)
        assert np.max(np.abs(ours - dense_hamiltonian_evolution(two_term_2q_signed, 0.9, psi0))) < 1e-12

    def test_reference_expectation(self, heisenberg, z0):
        psi_t = exact_evolution(heisenberg, 1.0, basis_state(6))
        mean = expectation(z0, psi_t)
        assert mean == pytest.approx(0.5024, abs=5e-4)
        assert 0.5 * (1 + mean) == pytest.approx(0.7512, abs=5e-4)

    def test_dense_cap(self):
        h = Hamiltonian([HamiltonianTerm(1.0, PauliString("X" * 9))])
        with pytest.raises(ValueError):
            exact_evolution(h, 1.0, basis_state(9))


class TestExpectation:
    def test_plus_eigenstate(self, z0):
        assert expectation(z0, basis_state(6, 0)) == pytest.approx(1.0, abs=1e-15)

    def test_minus_eigenstate(self, z0):
        assert expectation(z0, basis_state(6, 0b100000)) == pytest.approx(-1.0, abs=1e-15)

    def test_matches_dense_quadratic_form(self, nprng):
        obs = Observable(PauliString("ZY"))
        psi = random_state(nprng, 2)
        assert expectation(obs, psi) == pytest.approx(dense_observable_mean(obs, psi), abs=1e-12)
