"""Channel-constructor tests against explicit amplitude expansions."""

import itertools
import math

import numpy as np
import pytest

from ctsim import channels as ch
from ctsim import qcore as q

SQ2 = math.sqrt(2)


def amps_of(terms: dict[str, complex], n: int) -> np.ndarray:
    out = np.zeros(2**n, dtype=complex)
    for bits, a in terms.items():
        out[int(bits, 2)] = a
    return out


class TestDickePattern:
    def test_support_size_is_binomial(self):
        for m in range(1, 7):
            for zeros in range(m + 1):
                pat = ch.DickePattern(m, zeros)
                assert len(pat.support) == math.comb(m, zeros)

    def test_example_support(self):
        assert ch.DickePattern(3, 1).support == ("011", "101", "110")

    def test_state_normalized(self):
        st = ch.DickePattern(5, 2).state()
        assert abs(st.norm() - 1.0) < 1e-12


class TestThresholdChannel:
    def test_k1_m2_exact_amplitudes(self):
        state, reg = ch.build(ch.phik_spec(1, 2))
        expect = amps_of({"0000": 0.5, "0011": 0.5, "1100": 0.5, "1111": -0.5}, 4)
        np.testing.assert_allclose(state.amplitudes, expect, atol=1e-12)
        assert reg.roles == ("A", "B", "C1", "C2")

    def test_k2_m3_dicke_component(self):
        state, _ = ch.build(ch.phik_spec(2, 3))
        # project the A,B pair onto its Dicke-branch Bell state
        _, post, p = q.bell_measure(state, (0, 1), force=2)
        assert abs(p - 0.5) < 1e-12
        red = q.partial_trace(post, [2, 3, 4])
        dicke = ch.DickePattern(3, 1).state()
        assert abs(q.fidelity(dicke, red) - 1.0) < 1e-10

    def test_k1_reduces_to_all_ones_block(self):
        for m in (1, 2, 3, 4):
            a = ch.threshold_channel(1, m)
            b = ch.multi_pair_threshold_channel(1, 1, m)
            assert q.states_equal(a, b)

    def test_multi_pair_n1_equals_single(self):
        for k, m in [(1, 1), (1, 3), (2, 2), (2, 4), (3, 3)]:
            single, _ = ch.build(ch.phik_spec(k, m))
            multi, _ = ch.build(ch.ChannelSpec("phik2n", n=1, k=k, m=m))
            assert q.states_equal(single, multi)

    def test_invalid_k_rejected(self):
        with pytest.raises(ch.ChannelSpecError):
            ch.build(ch.phik_spec(3, 2))


class TestReferenceStates:
    def test_ghz_amplitudes(self):
        st = ch.ghz_state(3)
        expect = amps_of({"000": 1 / SQ2, "111": 1 / SQ2}, 3)
        np.testing.assert_allclose(st.amplitudes, expect, atol=1e-12)

    def test_w_single_excitation(self):
        st = ch.w_state(4)
        nonzero = dict(st.nonzero_terms())
        assert set(nonzero) == {"0001", "0010", "0100", "1000"}

    def test_cluster_small_signs(self):
        st = ch.linear_cluster_state(2)
        expect = amps_of({"00": 0.5, "01": 0.5, "10": 0.5, "11": -0.5}, 2)
        np.testing.assert_allclose(st.amplitudes, expect, atol=1e-12)

    def test_cluster_sign_rule(self):
        st = ch.linear_cluster_state(4)
        n = 4
        for i, amp in enumerate(st.amplitudes):
            bits = [(i >> (n - 1 - qb)) & 1 for qb in range(n)]
            sign = (-1) ** sum(bits[j] * bits[j + 1] for j in range(n - 1))
            assert abs(amp - sign / 4) < 1e-12

    def test_star_graph_stabilizer_structure(self):
        # graph states obey X_v (x) Z_neighbors = +1 for every vertex
        m = 3
        st = ch.star_graph_channel(m)
        edges = [(0, 1), (1, 2)] + [(2, 2 + j) for j in range(1, m)]
        neighbors = {v: set() for v in range(2 + m)}
        for a, b in edges:
            neighbors[a].add(b)
            neighbors[b].add(a)
        for v in range(2 + m):
            out = q.apply_pauli(st, v, "X")
            for u in neighbors[v]:
                out = q.apply_pauli(out, u, "Z")
            assert q.states_equal(out, st)

    def test_mes2_exact(self):
        st = ch.mes_state(2)
        c = 1 / (2 * SQ2)
        expect = amps_of({
            "0000": c, "0011": -c, "0101": -c, "0110": c,
            "1001": c, "1010": c, "1100": c, "1111": c}, 4)
        np.testing.assert_allclose(st.amplitudes, expect, atol=1e-12)

    def test_mes4_rejected(self):
        with pytest.raises(ch.ChannelSpecError):
            ch.mes_state(4)
        with pytest.raises(ch.ChannelSpecError):
            ch.build(ch.ChannelSpec("mes", n=4))


class TestGhzPmDecomposition:
    def test_m1(self):
        phi1, phi2 = ch.ghz_pm_decomposition(1)
        assert q.states_equal(phi1, q.ket("+"))
        assert q.states_equal(phi2, q.ket("-"))

    def test_m2_against_bruteforce(self):
        # oracle: uniform superpositions of plus/minus strings with even/odd
        # minus count, assembled term by term
        def pm_superposition(m, parity):
            total = np.zeros(2**m, dtype=complex)
            count = 0
            for signs in itertools.product("+-", repeat=m):
                if signs.count("-") % 2 == parity:
                    total += q.ket("".join(signs)).amplitudes
                    count += 1
            return q.StateVector(m, total / math.sqrt(count))

        for m in (2, 3, 4):
            phi1, phi2 = ch.ghz_pm_decomposition(m)
            assert q.states_equal(phi1, pm_superposition(m, 0))
            assert q.states_equal(phi2, pm_superposition(m, 1))

    def test_orthogonal(self):
        for m in range(1, 7):
            phi1, phi2 = ch.ghz_pm_decomposition(m)
            assert abs(np.vdot(phi1.amplitudes, phi2.amplitudes)) < 1e-12

    def test_reassembles_ghz(self):
        for m in range(1, 7):
            phi1, phi2 = ch.ghz_pm_decomposition(m)
            rebuilt = (np.kron(q.bell_state(1).amplitudes, phi1.amplitudes)
                       + np.kron(q.bell_state(2).amplitudes, phi2.amplitudes)) / SQ2
            np.testing.assert_allclose(rebuilt, ch.ghz_state(2 + m).amplitudes, atol=1e-10)


class TestBellPmBasis:
    def test_label_1_form(self):
        pm = ch.bell_in_pm_basis(1)
        np.testing.assert_allclose(pm.amplitudes, [1 / SQ2, 0, 0, 1 / SQ2], atol=1e-12)

    def test_label_4_form(self):
        pm = ch.bell_in_pm_basis(4)
        np.testing.assert_allclose(pm.amplitudes, [0, -1 / SQ2, 1 / SQ2, 0], atol=1e-12)

    def test_roundtrip_all_labels(self):
        plus = q.ket("+").amplitudes
        minus = q.ket("-").amplitudes
        vecs = [plus, minus]
        for label in (1, 2, 3, 4):
            pm = ch.bell_in_pm_basis(label)
            rebuilt = np.zeros(4, dtype=complex)
            for idx, amp in enumerate(pm.amplitudes):
                rebuilt += amp * np.kron(vecs[idx >> 1], vecs[idx & 1])
            np.testing.assert_allclose(rebuilt, q.bell_state(label).amplitudes, atol=1e-12)

    def test_correlation_classes(self):
        assert ch.pm_correlated(1) and ch.pm_correlated(3)
        assert not ch.pm_correlated(2) and not ch.pm_correlated(4)


def _all_channel_specs():
    specs = [
        ch.ChannelSpec("bell", bell_label=3),
        ch.ChannelSpec("ghz", qubits=4),
        ch.ChannelSpec("w", qubits=5),
        ch.ChannelSpec("cluster", qubits=5),
        ch.ChannelSpec("graph", m=3),
        ch.phik_spec(2, 3),
        ch.ChannelSpec("phik2n", n=2, k=2, m=3),
        ch.ChannelSpec("phiprime", n=2, k=1, m=2, r=(1, 4), s=(3, 2)),
        ch.ChannelSpec("mes", n=2),
        ch.ChannelSpec("mes", n=3),
        ch.ChannelSpec("phi2prime", n=2, k=1, m=2, j=("x", "0")),
        ch.ChannelSpec("phi3prime", n=2, k=2, m=2, j=("z", "x")),
        ch.ChannelSpec("general", k=2, m=3,
                       x=(0.5, 0.5, 0.5, 0.5),
                       slots=("zeros", "dicke:1", "ones", "dicke:2")),
    ]
    return specs


class TestCatalogInvariants:
    def test_every_pure_channel_normalized(self):
        for spec in _all_channel_specs():
            state, _ = ch.build(spec)
            assert abs(state.norm() - 1.0) < 1e-10, spec.family

    def test_mixed_channel_is_valid_density_matrix(self):
        spec = ch.ChannelSpec("mixed", k=2, m=2, x=(0.3, 0.3, 0.2, 0.2),
                              slots=("zeros", "dicke:1", "ones", "dicke:2"))
        with pytest.raises(ch.ChannelSpecError):
            spec.validate()  # dicke:2 over m=2 is the zeros block again
        spec = ch.ChannelSpec("mixed", k=2, m=3, x=(0.3, 0.3, 0.2, 0.2),
                              slots=("zeros", "dicke:1", "ones", "dicke:2"))
        state, _ = ch.build(spec)
        state.validate()

    def test_c_permutation_symmetry(self):
        for spec in [ch.phik_spec(2, 3), ch.phik_spec(1, 4),
                     ch.ChannelSpec("phik2n", n=2, k=2, m=3),
                     ch.ChannelSpec("phiprime", n=2, k=2, m=3, r=(1, 2), s=(3, 4)),
                     ch.ChannelSpec("phi2prime", n=2, k=2, m=3, j=("y", "0")),
                     ch.ChannelSpec("phi3prime", n=2, k=2, m=3, j=("z", "x"))]:
            state, reg = ch.build(spec)
            t = state.tensor_view()
            c_idx = reg.with_prefix("C")
            for i, jdx in itertools.combinations(range(len(c_idx)), 2):
                swapped = np.swapaxes(t, c_idx[i], c_idx[jdx])
                assert np.allclose(t, swapped, atol=1e-10), (spec.family, i, jdx)

    def test_branch_orthogonality(self):
        for k in range(1, 5):
            for m in range(k, 5):
                zeros = q.ket("0" * m)
                dicke = ch.DickePattern(m, k - 1).state()
                assert abs(np.vdot(zeros.amplitudes, dicke.amplitudes)) < 1e-12

    def test_genuine_entanglement_small_catalog(self):
        for spec in _all_channel_specs():
            state, _ = ch.build(spec)
            n = state.num_qubits
            for cut in range(1, 2 ** (n - 1)):
                subset = [qb for qb in range(n) if (cut >> qb) & 1]
                assert q.schmidt_rank(state, subset) >= 2, (spec.family, subset)


class TestLocalUnitaryIdentifications:
    @staticmethod
    def _cut_spectra(state):
        """Sorted reduced spectra across every bipartition: an LU invariant."""
        n = state.num_qubits
        spectra = []
        for cut in range(1, 2 ** (n - 1)):
            subset = [qb for qb in range(n) if (cut >> qb) & 1]
            red = q.partial_trace(state, sorted(subset))
            spectra.append(np.sort(np.linalg.eigvalsh(red.matrix)))
        return spectra

    def test_one_supervisor_graph_channel_is_ghz_class(self):
        graph = ch.star_graph_channel(1)
        ghz = ch.ghz_state(3)
        for a, b in zip(self._cut_spectra(graph), self._cut_spectra(ghz)):
            np.testing.assert_allclose(a, b, atol=1e-10)

    def test_k1_m2_channel_is_cluster_class(self):
        phi = ch.threshold_channel(1, 2)
        cluster = ch.linear_cluster_state(4)
        for a, b in zip(self._cut_spectra(phi), self._cut_spectra(cluster)):
            np.testing.assert_allclose(a, b, atol=1e-10)


class TestSpecValidation:
    def test_phiprime_needs_matching_lengths(self):
        with pytest.raises(ch.ChannelSpecError):
            ch.ChannelSpec("phiprime", n=2, k=1, m=2, r=(1,), s=(2, 3)).validate()

    def test_pauli_marks_not_all_identity(self):
        with pytest.raises(ch.ChannelSpecError):
            ch.ChannelSpec("phi3prime", n=2, k=1, m=1, j=("0", "0")).validate()

    def test_general_weights_must_normalize(self):
        with pytest.raises(ch.ChannelSpecError):
            ch.ChannelSpec("general", k=1, m=2, x=(1, 1, 0, 0),
                           slots=("zeros", "dicke:0", "zeros", "zeros")).validate()

    def test_slot_plan_mixing_rejected(self):
        with pytest.raises(ch.ChannelSpecError):
            ch.ChannelSpec("general", k=1, m=2,
                           x=(1 / SQ2, 1 / SQ2, 0, 0),
                           slots=("zeros", "even_pm", "zeros", "zeros")).validate()

    def test_k1_overlapping_slots_rejected(self):
        # with k = 1 the Dicke block is the all-ones block
        with pytest.raises(ch.ChannelSpecError):
            ch.ChannelSpec("general", k=1, m=3,
                           x=(1 / SQ2, 1 / SQ2, 0, 0),
                           slots=("ones", "dicke:0", "zeros", "zeros")).validate()

    def test_general_matches_phik(self):
        spec = ch.ChannelSpec("general", k=2, m=3,
                              x=(1 / SQ2, 1 / SQ2, 0, 0),
                              slots=("zeros", "dicke:1", "zeros", "zeros"))
        built, _ = ch.build(spec)
        phik, _ = ch.build(ch.phik_spec(2, 3))
        assert q.states_equal(built, phik)
