from functools import reduce

import numpy as np
import pytest

from vibrometer.encode import (QubitLayout, cnot_count_uvccsd, encode, expand_double_excitation,
                               restrict_to_onehot)
from vibrometer.errors import HermiticityError, ResourceLimitError, ValidationError
from vibrometer.pauli import PauliString
from vibrometer.sopham import ExpandedHamiltonian, ModeBasisSpec, SopHamiltonian, SopTerm, expand

from conftest import kron_pauli_sum, random_sop

SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)   # |1><0|
SIGMA_MINUS = SIGMA_PLUS.T.copy()                         # |0><1|


def on_qubits(ops: dict, n: int) -> np.ndarray:
    """Kronecker product with ``ops[k]`` on qubit k (basis bit k), identity elsewhere."""
    return reduce(np.kron, [ops.get(k, np.eye(2)) for k in reversed(range(n))])


class TestLayout:
    def test_offsets(self):
        layout = QubitLayout(ModeBasisSpec((2, 3, 4)))
        assert layout.offsets == (0, 2, 5)
        assert layout.n_qubits == 9
        assert layout.qubit(2, 3) == 8
        covered = sorted(layout.qubit(m, i) for m, n in enumerate((2, 3, 4)) for i in range(n))
        assert covered == list(range(9))

    def test_onehot_indices(self):
        layout = QubitLayout(ModeBasisSpec((2, 2)))
        # configuration (i0, i1) -> bits i0 and 2 + i1, mode 0 most significant in config order
        assert layout.onehot_indices().tolist() == [0b0101, 0b1001, 0b0110, 0b1010]

    def test_json_roundtrip(self, tmp_path):
        layout = QubitLayout(ModeBasisSpec((3, 2)))
        layout.save(tmp_path / "l.json")
        assert QubitLayout.load(tmp_path / "l.json") == layout
        with pytest.raises(ValidationError):
            QubitLayout.from_json({"modals": [3, 2], "offsets": [0, 2]})


class TestEncode:
    def test_number_operator(self):
        ham = ExpandedHamiltonian.from_strings(ModeBasisSpec((2,)), 0.0, [((0,), ((0, 0),), 1.0)])
        paulis, layout = encode(ham)
        assert paulis.n_qubits == 2
        assert paulis.constant == 0.5
        assert paulis.terms == ((PauliString.from_label("ZI"), -0.5),)

    def test_hopping(self):
        ham = ExpandedHamiltonian.from_strings(ModeBasisSpec((2,)), 0.0,
                                               [((0,), ((0, 1),), 1.0), ((0,), ((1, 0),), 1.0)])
        paulis, _ = encode(ham)
        assert paulis.constant == 0.0
        assert dict(paulis.terms) == {PauliString.from_label("XX"): 0.5,
                                      PauliString.from_label("YY"): 0.5}

    def test_hopping_dense(self):
        # sigma+_0 sigma-_1 + sigma+_1 sigma-_0 as 4x4 matrices
        ref = (on_qubits({0: SIGMA_PLUS, 1: SIGMA_MINUS}, 2)
               + on_qubits({1: SIGMA_PLUS, 0: SIGMA_MINUS}, 2))
        ham = ExpandedHamiltonian.from_strings(ModeBasisSpec((2,)), 0.0,
                                               [((0,), ((0, 1),), 1.0), ((0,), ((1, 0),), 1.0)])
        np.testing.assert_allclose(kron_pauli_sum(encode(ham)[0]), ref, atol=1e-15)

    def test_constant_carried(self, rng):
        sop = random_sop(rng, (2, 2), n_terms=3, constant=1.75)
        paulis, _ = encode(expand(sop))
        dense = kron_pauli_sum(paulis)
        assert np.trace(dense).real / dense.shape[0] == pytest.approx(paulis.constant)

    @pytest.mark.parametrize("modals", [(2, 2), (2, 3), (3, 3), (2, 2, 2), (3, 2, 2), (1, 3)])
    def test_restriction_oracle(self, rng, modals):
        for _ in range(4):
            sop = random_sop(rng, modals, n_terms=7, zero_prob=0.2)
            paulis, layout = encode(expand(sop))
            restricted = restrict_to_onehot(kron_pauli_sum(paulis), layout)
            np.testing.assert_allclose(restricted, sop.to_dense(), atol=1e-12, rtol=0)

    def test_block_preserving(self, rng):
        sop = random_sop(rng, (2, 3, 2, 2), n_terms=10)
        ham = expand(sop)
        paulis, layout = encode(ham)
        combos = list(ham.blocks)
        for s, _ in paulis.terms:
            touched = set(layout.modes_of(s))
            assert any(touched <= set(mc) for mc in combos)
            # and the string lies inside the qubits of those modes
            assert s.support & ~layout.qubits_of_modes(touched) == 0

    def test_mode_permutation_spectrum(self, rng):
        sop = random_sop(rng, (2, 3, 2), n_terms=8)
        perm = [2, 0, 1]  # new mode k is old mode perm[k]
        inverse = {old: new for new, old in enumerate(perm)}
        basis = ModeBasisSpec(tuple(sop.basis.modals[p] for p in perm))
        terms = [SopTerm(t.coeff, sorted((inverse[m], h) for m, h in t.factors)) for t in sop.terms]
        permuted = SopHamiltonian(basis, sop.constant, terms)
        spectra = []
        for h in (sop, permuted):
            paulis, layout = encode(expand(h))
            spectra.append(np.linalg.eigvalsh(restrict_to_onehot(kron_pauli_sum(paulis), layout)))
        np.testing.assert_allclose(spectra[0], spectra[1], atol=1e-12)

    def test_non_hermitian_input_detected(self):
        # bypass ExpandedHamiltonian validation to feed an asymmetric block
        ham = ExpandedHamiltonian.from_strings(ModeBasisSpec((2,)), 0.0,
                                               [((0,), ((0, 1),), 1.0), ((0,), ((1, 0),), 1.0)])
        object.__setattr__(ham, "blocks", {(0,): np.array([[0.0, 1.0], [0.0, 0.0]])})
        with pytest.raises(HermiticityError):
            encode(ham)

    def test_qubit_cap(self):
        ham = ExpandedHamiltonian(ModeBasisSpec((5, 5, 5, 5, 5)), 0.0, {})
        with pytest.raises(ResourceLimitError):
            encode(ham)
        encode(ham, max_qubits=25)


class TestDoubleExcitation:
    def dense_reference(self, qubits, n, amplitude=1.0):
        i, j, m, k = qubits
        a = on_qubits({i: SIGMA_PLUS, j: SIGMA_MINUS, m: SIGMA_PLUS, k: SIGMA_MINUS}, n)
        return 1j * amplitude * (a - a.conj().T)

    @pytest.mark.parametrize("qubits", [(0, 1, 2, 3), (3, 0, 2, 1), (1, 3, 0, 2)])
    def test_against_dense(self, qubits):
        strings = expand_double_excitation(*qubits, amplitude=1.0)
        assert len(strings) == 8
        dense = sum(c * s.to_matrix() for s, c in strings)
        np.testing.assert_allclose(dense, self.dense_reference(qubits, 4), atol=1e-12, rtol=0)

    def test_structure(self):
        strings = expand_double_excitation(0, 2, 4, 5, amplitude=0.8, n_qubits=7)
        assert len(strings) == 8
        assert len({s for s, _ in strings}) == 8
        for s, c in strings:
            assert abs(c) == pytest.approx(0.1)
            assert s.support == 0b110101
            assert {s.letter(q) for q in (0, 2, 4, 5)} <= {"X", "Y"}
            assert sum(s.letter(q) == "Y" for q in (0, 2, 4, 5)) % 2 == 1
        dense = sum(c * s.to_matrix() for s, c in strings)
        np.testing.assert_allclose(dense, self.dense_reference((0, 2, 4, 5), 7, 0.8), atol=1e-12)

    def test_hermitian(self):
        dense = sum(c * s.to_matrix() for s, c in expand_double_excitation(0, 1, 2, 3, 0.37))
        np.testing.assert_allclose(dense, dense.conj().T, atol=1e-15)

    def test_zero_amplitude(self):
        strings = expand_double_excitation(0, 1, 2, 3, amplitude=0.0)
        assert len(strings) == 8 and all(c == 0.0 for _, c in strings)

    def test_repeated_index(self):
        with pytest.raises(ValidationError):
            expand_double_excitation(0, 1, 1, 2)


class TestCnotCount:
    @pytest.mark.parametrize("M, n, expected", [(3, 3, 1296), (2, 1, 48), (6, 1, 720)])
    def test_values(self, M, n, expected):
        assert cnot_count_uvccsd(M, n) == expected

    def test_invalid(self):
        with pytest.raises(ValidationError):
            cnot_count_uvccsd(1, 3)
