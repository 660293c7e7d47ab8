import math

import numpy as np
import pytest

from vibrometer.encode import encode, restrict_to_onehot
from vibrometer.engine import fvci_ground_state
from vibrometer.errors import ValidationError
from vibrometer.sopham import expand
from vibrometer.synth import (TaylorPes, build_sop, ho_matrix_elements, pair_rotation,
                              pes_from_config, random_pes, random_rotation, rotate_coordinates)

from conftest import kron_pauli_sum


def ground(pes, n):
    return fvci_ground_state(expand(build_sop(pes, n))).ground_energy


class TestMatrixElements:
    def test_position(self):
        q = ho_matrix_elements("position", 2, 1.0)
        np.testing.assert_allclose(q, [[0, 1 / math.sqrt(2)], [1 / math.sqrt(2), 0]], atol=1e-15)

    def test_position_squared_diagonal(self):
        q2 = ho_matrix_elements("position", 6, 1.0, power=2)
        np.testing.assert_allclose(np.diag(q2), np.arange(6) + 0.5, atol=1e-13)

    def test_kinetic_diagonal(self):
        t = ho_matrix_elements("kinetic", 6, 1.0)
        np.testing.assert_allclose(np.diag(t), (np.arange(6) + 0.5) / 2, atol=1e-13)

    @pytest.mark.parametrize("omega", [0.7, 1.0, 2.3])
    def test_harmonic_is_diagonal(self, omega):
        n = 7
        h = ho_matrix_elements("kinetic", n, omega) \
            + 0.5 * omega ** 2 * ho_matrix_elements("position", n, omega, 2)
        np.testing.assert_allclose(h, np.diag(omega * (np.arange(n) + 0.5)), atol=1e-13)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_projected_power(self, k):
        n, omega = 5, 1.3
        big = n + k
        a = np.diag(np.sqrt(np.arange(1, big)), 1)
        q = (a + a.T) / math.sqrt(2 * omega)
        ref = np.linalg.matrix_power(q, k)[:n, :n]
        np.testing.assert_allclose(ho_matrix_elements("position", n, omega, k), ref, atol=1e-10)

    def test_errors(self):
        with pytest.raises(ValidationError):
            ho_matrix_elements("position", 4, 1.0, power=99)
        with pytest.raises(ValidationError):
            ho_matrix_elements("momentum", 4, 1.0)
        with pytest.raises(ValidationError):
            ho_matrix_elements("kinetic", 4, -1.0)


class TestBuildSop:
    def test_harmonic_energy(self):
        for n in (2, 3, 5):
            assert ground(TaylorPes((1.0, 2.0, 3.0)), n) == pytest.approx(3.0, abs=1e-12)

    def test_small_cubic_limit(self):
        base = ground(TaylorPes((1.0, 1.4)), 6)
        shifts = [abs(ground(TaylorPes((1.0, 1.4), {((0, 1), (1, 2)): c}), 6) - base)
                  for c in (1e-1, 1e-2, 1e-3)]
        assert shifts[0] > shifts[1] > shifts[2]
        assert shifts[2] < 1e-5

    def test_restriction_oracle(self):
        pes = random_pes((1.0, 1.2, 1.5), seed=3, cubic=0.05, quartic=0.02)
        sop = build_sop(pes, 2)
        paulis, layout = encode(expand(sop))
        np.testing.assert_allclose(restrict_to_onehot(kron_pauli_sum(paulis), layout),
                                   sop.to_dense(), atol=1e-12)

    def test_modal_count_mismatch(self):
        with pytest.raises(ValidationError):
            build_sop(TaylorPes((1.0, 2.0)), [2, 2, 2])


class TestPes:
    def test_validation(self):
        with pytest.raises(ValidationError):
            TaylorPes((1.0, -2.0))
        with pytest.raises(ValidationError):
            TaylorPes((1.0, 2.0), {((1, 0), (1, 2)): 0.1})
        with pytest.raises(ValidationError):
            TaylorPes((1.0, 2.0), {((0, 1), (3, 3)): 0.1})

    def test_json_roundtrip(self):
        pes = random_pes((1.0, 1.1, 1.3), seed=5, cubic=0.1, quartic=0.05)
        back = TaylorPes.from_json(pes.to_json())
        assert back.frequencies == pes.frequencies and back.couplings == pes.couplings

    def test_random_is_seeded(self):
        a = random_pes((1.0, 1.1, 1.3), seed=5, cubic=0.1, quartic=0.05)
        b = random_pes((1.0, 1.1, 1.3), seed=5, cubic=0.1, quartic=0.05)
        c = random_pes((1.0, 1.1, 1.3), seed=6, cubic=0.1, quartic=0.05)
        assert a.couplings == b.couplings != c.couplings
        # cubic: 3 + 3*2 + 1, quartic: 3 + 3*3 + 3
        assert len(a.couplings) == 25

    def test_from_config(self):
        pes = pes_from_config({"frequencies": [1.0, 2.0],
                               "couplings": [{"modes": [0, 1], "exponents": [2, 1], "value": 0.1}]})
        assert pes.couplings == {((0, 1), (2, 1)): 0.1}
        pes = pes_from_config({"frequencies": [1.0, 2.0], "random": {"seed": 1, "cubic": 0.1}})
        assert len(pes.couplings) == 2 + 2


class TestRotation:
    def test_identity(self):
        pes = random_pes((1.0, 1.1, 1.3), seed=5, cubic=0.1, quartic=0.05)
        rot = rotate_coordinates(pes, np.eye(3))
        np.testing.assert_allclose(rot.frequencies, pes.frequencies, rtol=1e-15)
        assert rot.couplings.keys() == pes.couplings.keys()
        for key, value in pes.couplings.items():
            assert rot.couplings[key] == pytest.approx(value, abs=1e-15)

    def test_degenerate_harmonic_invariant(self, rng):
        pes = TaylorPes((1.3, 1.3, 1.3))
        rot = rotate_coordinates(pes, random_rotation(3, rng))
        a = fvci_ground_state(expand(build_sop(pes, 3))).energies
        b = fvci_ground_state(expand(build_sop(rot, 3))).energies
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_two_mode_thirty_degrees(self):
        pes = random_pes((1.0, 1.3), seed=11, cubic=0.02, quartic=0.01)
        rot = rotate_coordinates(pes, pair_rotation(2, 0, 1, math.radians(30)))
        assert ground(rot, 8) == pytest.approx(ground(pes, 8), abs=1e-6)

    def test_off_diagonal_quadratic_becomes_coupling(self):
        rot = rotate_coordinates(TaylorPes((1.0, 2.0)), pair_rotation(2, 0, 1, 0.3))
        assert ((0, 1), (1, 1)) in rot.couplings

    def test_not_orthogonal(self):
        with pytest.raises(ValidationError):
            rotate_coordinates(TaylorPes((1.0, 2.0)), np.array([[1.0, 0.1], [0.0, 1.0]]))

    def test_random_rotation_is_special_orthogonal(self, rng):
        R = random_rotation(4, rng)
        np.testing.assert_allclose(R.T @ R, np.eye(4), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0)

    def test_four_mode_couplings_dropped(self, rng, caplog):
        pes = random_pes((1.0, 1.1, 1.2, 1.3), seed=2, quartic=0.05)
        rot = rotate_coordinates(pes, random_rotation(4, rng))
        assert all(len(m) <= 3 for m, _ in rot.couplings)
        assert "dropped" in caplog.text
