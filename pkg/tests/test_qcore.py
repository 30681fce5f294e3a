"""State-engine unit tests: gate algebra, measurement, traces, ranks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctsim import qcore as q

RNG = np.random.default_rng(1234)


def random_states(num_qubits=st.integers(1, 4), seed=st.integers(0, 10_000)):
    return st.builds(
        lambda n, s: q.random_state(n, np.random.default_rng(s)), num_qubits, seed)


class TestPauliAlgebra:
    def test_paulis_unitary_hermitian(self):
        for name, mat in q.PAULI.items():
            np.testing.assert_allclose(mat @ mat.conj().T, np.eye(2), atol=1e-14)
            np.testing.assert_allclose(mat, mat.conj().T, atol=1e-14)

    def test_x_z_anticommute(self):
        x, z = q.PAULI["X"], q.PAULI["Z"]
        np.testing.assert_allclose(x @ z, -(z @ x), atol=1e-14)

    def test_bell_label_bits_roundtrip(self):
        for label in (1, 2, 3, 4):
            phase, parity = q.bell_bits(label)
            assert q.bell_label(phase, parity) == label


class TestTensor:
    def test_basis_product(self):
        out = q.tensor(q.ket("0"), q.ket("1"))
        np.testing.assert_allclose(out.amplitudes, [0, 1, 0, 0], atol=1e-14)

    def test_total_system_with_unit_alpha(self):
        # alpha = 1 input against the first Bell pair
        total = q.tensor(q.qubit_state(1, 0), q.bell_state(1))
        expect = np.zeros(8)
        expect[0b000] = expect[0b011] = 1 / math.sqrt(2)
        np.testing.assert_allclose(total.amplitudes, expect, atol=1e-12)

    @given(random_states(), random_states())
    @settings(max_examples=25, deadline=None)
    def test_norm_multiplicative(self, a, b):
        assert abs(q.tensor(a, b).norm() - 1.0) < 1e-10


class TestApplyPauli:
    def test_z_converts_bell_2_to_1(self):
        out = q.apply_pauli(q.bell_state(2), 1, "Z")
        assert q.states_equal(out, q.bell_state(1))

    def test_x_flips_basis(self):
        out = q.apply_pauli(q.ket("0"), 0, "X")
        assert q.states_equal(out, q.ket("1"))

    @given(random_states(), st.sampled_from("IXYZ"), st.integers(0, 3))
    @settings(max_examples=40, deadline=None)
    def test_involution_up_to_phase(self, state, label, qubit):
        qubit = qubit % state.num_qubits
        twice = q.apply_pauli(q.apply_pauli(state, qubit, label), qubit, label)
        assert q.states_equal(twice, state)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            q.apply_pauli(q.ket("0"), 1, "X")

    def test_composed_label(self):
        zx = q.apply_pauli(q.qubit_state(0.6, 0.8), 0, "ZX")
        step = q.apply_pauli(q.apply_pauli(q.qubit_state(0.6, 0.8), 0, "X"), 0, "Z")
        assert q.states_equal(zx, step)


class TestMeasureQubit:
    def test_plus_in_z_is_even(self):
        _, _, p = q.measure_qubit(q.ket("+"), 0, q.BASIS_Z, force=0)
        assert abs(p - 0.5) < 1e-12

    def test_zero_in_z_deterministic(self):
        outcome, post, p = q.measure_qubit(q.ket("0"), 0, q.BASIS_Z,
                                           rng=np.random.default_rng(0))
        assert outcome == 0 and abs(p - 1.0) < 1e-12
        assert q.states_equal(post, q.ket("0"))

    def test_supervisor_measurement_collapses_bell_branch(self):
        # one-supervisor threshold channel: C = 0 leaves the pair in B1
        from ctsim.channels import threshold_channel
        state = threshold_channel(1, 1)
        _, post, p = q.measure_qubit(state, 2, q.BASIS_Z, force=0)
        assert abs(p - 0.5) < 1e-12
        red = q.partial_trace(post, [0, 1])
        assert abs(q.fidelity(q.bell_state(1), red) - 1.0) < 1e-10

    @given(random_states(), st.integers(0, 3))
    @settings(max_examples=40, deadline=None)
    def test_born_completeness(self, state, qubit):
        qubit = qubit % state.num_qubits
        probs = []
        for b in (0, 1):
            try:
                _, post, p = q.measure_qubit(state, qubit, q.BASIS_X, force=b)
                probs.append(p)
                assert abs(post.norm() - 1.0) < 1e-10
            except ValueError:
                probs.append(0.0)
        assert abs(sum(probs) - 1.0) < 1e-10

    def test_forcing_impossible_outcome_raises(self):
        with pytest.raises(ValueError):
            q.measure_qubit(q.ket("0"), 0, q.BASIS_Z, force=1)

    def test_bloch_specializations(self):
        for forced in (0, 1):
            _, post_z, pz = q.measure_qubit(q.ket("+"), 0, q.BASIS_Z, force=forced)
            _, post_b, pb = q.measure_qubit(q.ket("+"), 0,
                                            q.MeasurementBasis.bloch(0.0, 0.3), force=forced)
            assert abs(pz - pb) < 1e-12
            assert q.states_equal(post_z, post_b)
        _, post, p = q.measure_qubit(q.ket("0"), 0,
                                     q.MeasurementBasis.bloch(math.pi / 2, 0.0), force=0)
        assert abs(p - 0.5) < 1e-12
        assert q.states_equal(post, q.ket("+"))


class TestBellMeasure:
    def test_eigenstate(self):
        state = q.tensor(q.bell_state(3), q.ket("0"))
        label, _, p = q.bell_measure(state, (0, 1), rng=np.random.default_rng(0))
        assert label == 3 and abs(p - 1.0) < 1e-12

    def test_uniform_over_labels(self):
        psi = q.qubit_state(math.sqrt(0.3), math.sqrt(0.7))
        total = q.tensor(psi, q.bell_state(1))
        for label in (1, 2, 3, 4):
            _, _, p = q.bell_measure(total, (0, 1), force=label)
            assert abs(p - 0.25) < 1e-12

    def test_branch_state_label_2(self):
        a, b = math.sqrt(0.3), math.sqrt(0.7)
        total = q.tensor(q.qubit_state(a, b), q.bell_state(1))
        _, post, _ = q.bell_measure(total, (0, 1), force=2)
        red = q.partial_trace(post, [2])
        assert abs(q.fidelity(q.qubit_state(a, -b), red) - 1.0) < 1e-10

    def test_completeness(self):
        state = q.random_state(3, np.random.default_rng(7))
        total = sum(q.bell_measure(state, (0, 2), force=lab)[2] for lab in (1, 2, 3, 4))
        assert abs(total - 1.0) < 1e-10

    def test_identical_indices_rejected(self):
        with pytest.raises(ValueError):
            q.bell_measure(q.ket("00"), (1, 1))


class TestPartialTrace:
    def test_bell_reduction_maximally_mixed(self):
        red = q.partial_trace(q.bell_state(1), [0])
        np.testing.assert_allclose(red.matrix, np.eye(2) / 2, atol=1e-12)

    def test_trace_one(self):
        state = q.random_state(4, np.random.default_rng(3))
        red = q.partial_trace(state, [1, 3])
        assert abs(np.trace(red.matrix).real - 1.0) < 1e-10

    def test_keep_all_gives_projector(self):
        state = q.random_state(2, np.random.default_rng(5))
        red = q.partial_trace(state, [0, 1])
        np.testing.assert_allclose(
            red.matrix, np.outer(state.amplitudes, state.amplitudes.conj()), atol=1e-12)

    def test_empty_subset_rejected(self):
        with pytest.raises(ValueError):
            q.partial_trace(q.bell_state(1), [])

    def test_density_matrix_input(self):
        dm = q.DensityMatrix.from_state(q.bell_state(1))
        red = q.partial_trace(dm, [1])
        np.testing.assert_allclose(red.matrix, np.eye(2) / 2, atol=1e-12)


class TestFidelity:
    def test_self_fidelity(self):
        s = q.random_state(3, np.random.default_rng(11))
        assert abs(q.fidelity(s, s) - 1.0) < 1e-12

    def test_balanced_state_killed_by_zx(self):
        psi = q.qubit_state(1 / math.sqrt(2), 1 / math.sqrt(2))
        assert q.fidelity(psi, q.apply_pauli(psi, 0, "ZX")) < 1e-12

    def test_z_error_fidelity_formula(self):
        # <psi|Z|psi>^2 = (|a|^2 - |b|^2)^2
        a2 = 0.3
        psi = q.qubit_state(math.sqrt(a2), math.sqrt(1 - a2))
        got = q.fidelity(psi, q.apply_pauli(psi, 0, "Z"))
        assert abs(got - (2 * a2 - 1) ** 2) < 1e-12

    def test_mixed_state(self):
        half = q.DensityMatrix(1, np.eye(2) / 2)
        assert abs(q.fidelity(q.ket("0"), half) - 0.5) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            q.fidelity(q.ket("0"), q.ket("00"))


class TestSchmidtRank:
    def test_product(self):
        assert q.schmidt_rank(q.ket("00"), [0]) == 1

    def test_bell(self):
        assert q.schmidt_rank(q.bell_state(1), [0]) == 2

    def test_trivial_bipartition_rejected(self):
        with pytest.raises(ValueError):
            q.schmidt_rank(q.ket("00"), [0, 1])

    @given(random_states(num_qubits=st.integers(2, 4)), st.integers(0, 14))
    @settings(max_examples=30, deadline=None)
    def test_matches_reduced_rank(self, state, cut_seed):
        # reduced eigenvalues are the squared Schmidt coefficients
        n = state.num_qubits
        cut = 1 + cut_seed % max(2 ** (n - 1) - 1, 1)
        subset = [qb for qb in range(n) if (cut >> qb) & 1]
        if not subset or len(subset) == n:
            subset = [0]
        rank = q.schmidt_rank(state, subset)
        red = q.partial_trace(state, sorted(subset))
        eig = np.linalg.eigvalsh(red.matrix)
        assert rank == int(np.sum(eig > q.RANK_CUTOFF**2))


class TestStatesEqual:
    def test_global_phase_ignored(self):
        s = q.random_state(2, np.random.default_rng(9))
        rotated = q.StateVector(2, np.exp(0.7j) * s.amplitudes)
        assert q.states_equal(s, rotated)

    def test_different_states(self):
        assert not q.states_equal(q.ket("0"), q.ket("1"))


class TestDensityMatrix:
    def test_validation_passes_for_pure(self):
        q.DensityMatrix.from_state(q.bell_state(4)).validate()

    def test_rejects_non_hermitian(self):
        bad = q.DensityMatrix(1, np.array([[0.5, 0.2], [0.1, 0.5]]))
        with pytest.raises(ValueError):
            bad.validate()

    def test_rejects_wrong_trace(self):
        bad = q.DensityMatrix(1, np.eye(2))
        with pytest.raises(ValueError):
            bad.validate()
