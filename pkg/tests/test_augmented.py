import math

import numpy as np
import pytest

from mlmc_qdrift import (
    Hamiltonian,
    HamiltonianTerm,
    LevelHierarchy,
    Observable,
    PauliString,
    RngStream,
    basis_state,
    block_expectation,
    block_generator_norms,
    build_block_step,
    check_norm_bounds,
    coupled_sample,
    evolve_augmented,
    run_trajectory,
    sample_sequence,
    shot_noise_variance,
    zeta,
)
from mlmc_qdrift.augmented import (
    AugmentedState,
    BlockObservable,
    dense_block_observable,
    shot_noise_worst_case,
    stacked_vector,
)
from mlmc_qdrift.mlmc import split_coupled_sequence
from oracles import dense_exp, random_state


def dense_expm(matrix: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring Taylor exponential for small non-Hermitian blocks."""
    norm = np.linalg.norm(matrix, 2)
    squarings = max(0, int(math.ceil(math.log2(max(norm, 1e-30)))) + 1)
    scaled = matrix / (2**squarings)
    out = np.eye(matrix.shape[0], dtype=complex)
    term = np.eye(matrix.shape[0], dtype=complex)
    for k in range(1, 30):
        term = term @ scaled / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


@pytest.fixture(scope="module")
def positive_2q():
    """Positive coefficients so trajectory angles equal the raw step size."""
    return Hamiltonian([
        HamiltonianTerm(1.0, PauliString("XI")),
        HamiltonianTerm(0.7, PauliString("ZZ")),
        HamiltonianTerm(0.4, PauliString("YX")),
    ])


class TestZeta:
    def test_unit_tau(self):
        h = Hamiltonian([
            HamiltonianTerm(1.0, PauliString("XI")),
            HamiltonianTerm(1.0, PauliString("ZZ")),
        ])
        hier = LevelHierarchy.for_problem(h, t=1.0, n0=2, max_level=0)
        assert zeta(0, hier, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_sqrt2_growth(self, heisenberg):
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 4)
        assert zeta(3, hier) == pytest.approx(math.sqrt(2.0) * zeta(2, hier), rel=1e-12)

    def test_reference_value(self, heisenberg):
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 2)
        assert zeta(1, hier, 1.0) == pytest.approx(math.sqrt(256.0 / 11.5), rel=1e-12)

    def test_rejects_bad_scale(self, heisenberg):
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 1)
        with pytest.raises(ValueError):
            zeta(1, hier, 0.0)


class TestEvolveAugmented:
    def test_single_term_error_block_vanishes(self):
        h = Hamiltonian([HamiltonianTerm(1.0, PauliString("XY"))])
        hier = LevelHierarchy.for_problem(h, 1.0, 2, 1)
        seq = np.zeros(4, dtype=np.int64)
        chi = evolve_augmented(h, hier, 1, seq, basis_state(2))
        assert np.max(np.abs(chi.error_block)) < 1e-12
        assert chi.squared_norm == pytest.approx(1.0, abs=1e-12)

    def test_matches_coupled_sample(self, heisenberg, z0):
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 2)
        psi0 = basis_state(6)
        stream = RngStream(13).substream(1, 2, 0)
        p_fine, p_coarse, y = coupled_sample(heisenberg, hier, 2, stream, psi0, z0)
        seq = sample_sequence(stream, heisenberg, hier.n_gates(2))
        chi = evolve_augmented(heisenberg, hier, 2, seq, psi0)
        assert block_expectation(chi, z0) == pytest.approx(y, abs=1e-10)
        assert p_fine - p_coarse == pytest.approx(y, abs=1e-15)

    def test_wrong_length_rejected(self, heisenberg):
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 1)
        with pytest.raises(ValueError):
            evolve_augmented(heisenberg, hier, 1, np.zeros(100, dtype=np.int64), basis_state(6))

    def test_level_zero_rejected(self, heisenberg):
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 1)
        with pytest.raises(ValueError):
            evolve_augmented(heisenberg, hier, 0, np.zeros(128, dtype=np.int64), basis_state(6))

    def test_error_scales_linearly_in_tau_for_fixed_blocks(self, heisenberg):
        """With the index pairs held fixed, |e| shrinks proportionally to tau."""
        psi0 = basis_state(6)
        seq = sample_sequence(RngStream(3), heisenberg, 64)
        norms = []
        taus = [0.02 * 2**-k for k in range(4)]
        for tau in taus:
            fine = run_trajectory(heisenberg, seq, tau, psi0)
            coarse = run_trajectory(heisenberg, split_coupled_sequence(seq), 2 * tau, psi0)
            norms.append(np.linalg.norm(fine - coarse))
        slope = np.polyfit(np.log2(taus), np.log2(norms), 1)[0]
        assert 0.8 <= slope <= 1.2


class TestBlockStep:
    def test_equal_indices_kill_off_diagonal(self):
        a = PauliString("XI")
        step = build_block_step(a, a, 0.3, 2.0)
        assert np.max(np.abs(step[:4, 4:])) < 1e-14

    def test_zero_tau_is_identity(self):
        step = build_block_step(PauliString("XI"), PauliString("ZZ"), 0.0, 2.0)
        assert np.max(np.abs(step - np.eye(8))) < 1e-14

    def test_dense_cap(self):
        with pytest.raises(ValueError):
            build_block_step(PauliString("X" * 9), PauliString("Z" * 9), 0.1, 1.0)

    def test_iterated_block_map_matches_pairwise_path(self, positive_2q):
        """Applying the 2d map to (0, psi0) reproduces the two-path evolution."""
        hier = LevelHierarchy.for_problem(positive_2q, t=0.9, n0=2, max_level=1)
        seq = sample_sequence(RngStream(21), positive_2q, hier.n_gates(1))
        psi0 = random_state(np.random.default_rng(2), 2)
        tau = hier.tau(1)
        z = zeta(1, hier)
        chi_vec = np.concatenate([np.zeros(4, dtype=complex), psi0])
        for m in range(hier.coarse_blocks(1)):
            a = positive_2q.terms[seq[2 * m]].pauli
            b = positive_2q.terms[seq[2 * m + 1]].pauli
            chi_vec = build_block_step(a, b, tau, z) @ chi_vec
        chi = evolve_augmented(positive_2q, hier, 1, seq, psi0)
        assert np.max(np.abs(chi_vec[:4] - chi.error_block)) < 1e-12
        assert np.max(np.abs(chi_vec[4:] - chi.coarse_block)) < 1e-12

    def test_block_step_equals_composed_half_step_flows(self):
        """The block map factors into the two continuous half-step flows."""
        a, b = PauliString("XZ"), PauliString("YI")
        tau, z = 0.17, 1.9
        from mlmc_qdrift import to_dense

        da, db = to_dense(a), to_dense(b)
        first = np.kron(np.eye(2), dense_exp(da, -tau))
        generator = np.zeros((8, 8), dtype=complex)
        generator[:4, :4] = -1j * tau * db
        generator[:4, 4:] = -1j * tau * z * (db - da)
        generator[4:, 4:] = -1j * tau * da
        second = dense_expm(generator)
        assert np.max(np.abs(second @ first - build_block_step(a, b, tau, z))) < 1e-12


class TestBlockExpectation:
    def test_zero_error_block(self, z0):
        chi = AugmentedState(
            error_block=np.zeros(64, dtype=complex),
            coarse_block=basis_state(6),
            zeta=3.0,
            squared_norm=1.0,
        )
        assert block_expectation(chi, z0) == 0.0

    def test_scale_invariance(self, heisenberg, z0):
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 1)
        seq = sample_sequence(RngStream(31), heisenberg, hier.n_gates(1))
        psi0 = basis_state(6)
        values = [
            block_expectation(evolve_augmented(heisenberg, hier, 1, seq, psi0, c), z0)
            for c in (0.5, 1.0, 2.0)
        ]
        assert max(values) - min(values) < 1e-12

    def test_matches_pairwise_difference_on_random_sequences(self, heisenberg, z0):
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 1)
        psi0 = basis_state(6)
        base = RngStream(37)
        for i in range(100):
            stream = base.substream(1, 1, i)
            p_fine, p_coarse, y = coupled_sample(heisenberg, hier, 1, stream, psi0, z0)
            seq = sample_sequence(stream, heisenberg, hier.n_gates(1))
            chi = evolve_augmented(heisenberg, hier, 1, seq, psi0)
            assert abs(block_expectation(chi, z0) - y) < 1e-10


class TestShotNoise:
    def test_zero_error_closed_form(self, z0):
        z = 4.0
        chi = AugmentedState(
            error_block=np.zeros(64, dtype=complex),
            coarse_block=basis_state(6),
            zeta=z,
            squared_norm=1.0,
        )
        assert shot_noise_variance(chi, z0) == pytest.approx(1.0 / z**2, abs=1e-15)

    def test_single_term_gives_tau_over_c_squared(self):
        h = Hamiltonian([HamiltonianTerm(1.0, PauliString("XY"))])
        hier = LevelHierarchy.for_problem(h, 1.0, 2, 1)
        chi = evolve_augmented(h, hier, 1, np.zeros(4, dtype=np.int64), basis_state(2), c=1.0)
        assert shot_noise_variance(chi, Observable(PauliString("ZI"))) == pytest.approx(
            hier.tau(1), abs=1e-12
        )

    def test_closed_form_matches_dense_block_square(self, positive_2q, z_first_2q):
        hier = LevelHierarchy.for_problem(positive_2q, t=0.9, n0=2, max_level=1)
        base = RngStream(43)
        psi0 = basis_state(2)
        for i in range(20):
            seq = sample_sequence(base.substream(1, 1, i), positive_2q, hier.n_gates(1))
            chi = evolve_augmented(positive_2q, hier, 1, seq, psi0)
            o_hat = dense_block_observable(z_first_2q, chi.zeta)
            vec = stacked_vector(chi)
            quad = float((vec.conj() @ (o_hat @ (o_hat @ vec))).real)
            y = block_expectation(chi, z_first_2q)
            expected = chi.squared_norm * quad - y * y
            assert shot_noise_variance(chi, z_first_2q) == pytest.approx(expected, abs=1e-10)

    def test_worst_case_dominates(self, heisenberg, z0):
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 2)
        seq = sample_sequence(RngStream(51), heisenberg, hier.n_gates(2))
        chi = evolve_augmented(heisenberg, hier, 2, seq, basis_state(6))
        assert shot_noise_variance(chi, z0) <= shot_noise_worst_case(chi, z0) + 1e-12


class TestNormBounds:
    def test_zero_error_is_tight(self):
        chi = AugmentedState(
            error_block=np.zeros(4, dtype=complex),
            coarse_block=basis_state(2),
            zeta=2.0,
            squared_norm=1.0,
        )
        diag = check_norm_bounds(chi, error_rate_bound=1.0, tau=0.25, c=1.0)
        assert diag.norm_lower_ok and diag.norm_upper_ok
        assert diag.squared_norm == 1.0
        assert diag.error_norm == 0.0

    def test_observable_norm_bound_at_unit_zeta(self):
        chi = AugmentedState(
            error_block=np.zeros(4, dtype=complex),
            coarse_block=basis_state(2),
            zeta=1.0,
            squared_norm=1.0,
        )
        diag = check_norm_bounds(chi, 1.0, 1.0, 1.0)
        assert diag.observable_norm_bound == pytest.approx(2.0, abs=1e-12)
        assert diag.observable_norm <= 2.0
        assert diag.observable_norm == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)

    def test_measured_rate_bound_is_self_consistent(self, heisenberg):
        """Using the path's own measured rate makes the S bound hold exactly."""
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 1)
        seq = sample_sequence(RngStream(61), heisenberg, hier.n_gates(1))
        chi = evolve_augmented(heisenberg, hier, 1, seq, basis_state(6))
        tau = hier.tau(1)
        diag = check_norm_bounds(chi, error_rate_bound=chi.error_norm / tau, tau=tau, c=1.0)
        assert diag.norm_lower_ok and diag.norm_upper_ok and diag.observable_norm_ok
        assert diag.measured_error_rate == pytest.approx(chi.error_norm / tau, rel=1e-12)

    def test_measured_rate_grows_across_levels(self, heisenberg):
        """|e| shrinks like sqrt(tau), so the per-level rate |e|/tau grows.

        A level-independent pathwise rate constant is therefore not observed
        at these parameters; the diagnostics report the measured ratio.
        """
        hier = LevelHierarchy.for_problem(heisenberg, 1.0, 128, 5)
        psi0 = basis_state(6)
        base = RngStream(67)
        rates = []
        for level in range(1, 6):
            vals = []
            for i in range(12):
                seq = sample_sequence(base.substream(1, level, i), heisenberg, hier.n_gates(level))
                chi = evolve_augmented(heisenberg, hier, level, seq, psi0)
                vals.append(chi.error_norm / hier.tau(level))
            rates.append(np.mean(vals))
        assert rates[-1] > 2.0 * rates[0]
        assert rates[-1] < 16.0 * rates[0]


class TestBlockGenerators:
    def test_equal_indices_give_zero_antihermitian_part(self):
        a = PauliString("XZ")
        gen = block_generator_norms(a, a, 0.2, 3.0)
        assert gen.antihermitian_norm == 0.0

    def test_antihermitian_norm_formula(self):
        a, b = PauliString("XI"), PauliString("ZI")
        tau, z = 0.15, 2.5
        gen = block_generator_norms(a, b, tau, z)
        from mlmc_qdrift import to_dense

        delta_norm = np.linalg.norm(to_dense(b) - to_dense(a), 2)
        assert gen.antihermitian_norm == pytest.approx(0.5 * tau * z * delta_norm, rel=1e-12)
        assert gen.antihermitian_norm <= tau * z + 1e-12

    def test_parts_are_hermitian(self):
        gen = block_generator_norms(PauliString("XY"), PauliString("ZZ"), 0.21, 1.7)
        assert np.max(np.abs(gen.hermitian_part - gen.hermitian_part.conj().T)) < 1e-14
        assert np.max(np.abs(gen.antihermitian_part - gen.antihermitian_part.conj().T)) < 1e-14

    def test_reconstruction_is_exact(self, nprng):
        words = ["XI", "ZZ", "YX", "IZ", "XY"]
        for _ in range(10):
            a, b = nprng.choice(words, size=2, replace=False)
            gen = block_generator_norms(PauliString(a), PauliString(b), 0.11, 2.2)
            assert gen.reconstruction_error < 1e-12


class TestBlockObservable:
    def test_norm_bound_field(self, z0):
        block = BlockObservable(base=z0, zeta=2.0)
        assert block.norm_bound == pytest.approx(0.5 + 0.25, abs=1e-15)
        assert block.exact_norm <= block.norm_bound

    def test_exact_norm_matches_dense(self, z_first_2q):
        z = 1.7
        dense = dense_block_observable(z_first_2q, z)
        top = float(np.max(np.abs(np.linalg.eigvalsh(dense))))
        block = BlockObservable(base=z_first_2q, zeta=z)
        assert block.exact_norm == pytest.approx(top, rel=1e-12)
