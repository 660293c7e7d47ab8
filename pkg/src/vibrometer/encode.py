"""Direct (one-hot) mapping of bosonic strings onto qubits, and UVCCSD gate counting.

Each modal is one qubit. Qubit ``offset(m) + i`` is occupied (state ``|1>``)
when mode ``m`` sits in modal ``i``. With ``Z|1> = -|1>``::

    a^dag_p a_p  ->  (I - Z_P) / 2
    a^dag_p a_q  ->  sigma+_P sigma-_Q,   sigma+- = (X -+ iY) / 2
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _io
from .errors import ResourceLimitError, ValidationError
from .pauli import PauliString, PauliSum
from .sopham import ExpandedHamiltonian, ModeBasisSpec

#: qubit cap for encode; beyond this dense verification is impractical
MAX_QUBITS = 24

_Expansion = list[tuple[int, int, complex]]  # (x mask, z mask, coefficient)


@dataclass(frozen=True)
class QubitLayout:
    basis: ModeBasisSpec

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for n in self.basis.modals:
            out.append(acc)
            acc += n
        return tuple(out)

    @property
    def n_qubits(self) -> int:
        return sum(self.basis.modals)

    def qubit(self, mode: int, modal: int) -> int:
        if not 0 <= modal < self.basis.modals[mode]:
            raise ValidationError(f"modal {modal} out of range for mode {mode}")
        return self.offsets[mode] + modal

    def mode_mask(self, mode: int) -> int:
        return ((1 << self.basis.modals[mode]) - 1) << self.offsets[mode]

    def modes_of(self, string: PauliString) -> tuple[int, ...]:
        """Modes whose qubit block the string touches."""
        support = string.support
        return tuple(m for m in range(self.basis.mode_count) if support & self.mode_mask(m))

    def qubits_of_modes(self, modes) -> int:
        mask = 0
        for m in modes:
            mask |= self.mode_mask(m)
        return mask

    def onehot_index(self, occupation) -> int:
        return sum(1 << (self.offsets[m] + i) for m, i in enumerate(occupation))

    def onehot_indices(self) -> np.ndarray:
        """Qubit basis indices of all one-hot states, in configuration order."""
        return np.array([self.onehot_index(c) for c in self.basis.configurations()],
                        dtype=np.int64)

    def to_json(self) -> dict:
        return {"modals": list(self.basis.modals), "offsets": list(self.offsets)}

    @classmethod
    def from_json(cls, data: dict) -> "QubitLayout":
        layout = cls(ModeBasisSpec(tuple(data["modals"])))
        if "offsets" in data and list(data["offsets"]) != list(layout.offsets):
            raise ValidationError("layout offsets do not match the modal counts")
        return layout

    def save(self, path) -> None:
        _io.write_json(path, self.to_json())

    @classmethod
    def load(cls, path) -> "QubitLayout":
        return cls.from_json(_io.read_json(path))


def _ladder_expansion(P: int, Q: int) -> _Expansion:
    """Pauli expansion of a^dag_P a_Q on qubits P, Q."""
    if P == Q:
        return [(0, 0, 0.5), (0, 1 << P, -0.5)]
    xp, xq = 1 << P, 1 << Q
    # (X_P - iY_P)(X_Q + iY_Q) / 4
    return [
        (xp | xq, 0, 0.25),
        (xp | xq, xq, 0.25j),
        (xp | xq, xp, -0.25j),
        (xp | xq, xp | xq, 0.25),
    ]


def encode(ham: ExpandedHamiltonian, max_qubits: int = MAX_QUBITS) -> tuple[PauliSum, QubitLayout]:
    """Map an expanded Hamiltonian onto a qubit Hamiltonian under the direct mapping."""
    layout = QubitLayout(ham.basis)
    n_qubits = layout.n_qubits
    if n_qubits > max_qubits:
        raise ResourceLimitError(f"{n_qubits} qubits exceeds the encode cap of {max_qubits}")
    cache: dict[tuple[int, int, int], _Expansion] = {}

    def local(mode: int, p: int, q: int) -> _Expansion:
        key = (mode, p, q)
        if key not in cache:
            off = layout.offsets[mode]
            cache[key] = _ladder_expansion(off + p, off + q)
        return cache[key]

    acc: dict[tuple[int, int], complex] = {}
    for mc, pq, coeff in ham.strings():
        factors = [local(m, p, q) for m, (p, q) in zip(mc, pq)]
        for combo in itertools.product(*factors):
            x = z = 0
            c = coeff
            for fx, fz, fc in combo:
                x |= fx
                z |= fz
                c = c * fc
            acc[(x, z)] = acc.get((x, z), 0.0) + c
    coeffs = {PauliString(n_qubits, x, z): c for (x, z), c in acc.items()}
    return PauliSum.from_mapping(n_qubits, coeffs, constant=ham.constant), layout


def restrict_to_onehot(matrix: np.ndarray, layout: QubitLayout) -> np.ndarray:
    """Rows and columns of ``matrix`` belonging to one-hot states, in configuration order."""
    idx = layout.onehot_indices()
    return matrix[np.ix_(idx, idx)]


def expand_double_excitation(i: int, j: int, m: int, n: int, amplitude: float = 1.0,
                             n_qubits: int | None = None) -> list[tuple[PauliString, float]]:
    """Pauli form of ``i * amplitude * (s+_i s-_j s+_m s-_n - h.c.)``.

    The result has eight strings, each an X/Y pattern with an odd number of Ys on
    the four qubits, with coefficients ``+-amplitude / 8``.
    """
    qubits = (i, j, m, n)
    if len(set(qubits)) != 4:
        raise ValidationError(f"double excitation needs four distinct qubits, got {qubits}")
    if min(qubits) < 0:
        raise ValidationError("qubit indices must be non-negative")
    if n_qubits is None:
        n_qubits = max(qubits) + 1
    elif max(qubits) >= n_qubits:
        raise ValidationError("qubit index beyond n_qubits")

    # sigma+ = (X - iY)/2 on creation qubits, sigma- = (X + iY)/2 on annihilation qubits
    y_sign = (-1, 1, -1, 1)
    out = []
    for letters in itertools.product("XY", repeat=4):
        n_y = letters.count("Y")
        if n_y % 2 == 0:
            continue
        c = 1 / 16
        for letter, s in zip(letters, y_sign):
            if letter == "Y":
                c *= 1j * s
        # i * (c - conj(c)) = -2 Im(c)
        coeff = -2.0 * c.imag * amplitude
        x = z = 0
        for letter, q in zip(letters, qubits):
            x |= 1 << q
            if letter == "Y":
                z |= 1 << q
        out.append((PauliString(n_qubits, x, z), coeff + 0.0))
    return out


def cnot_count_uvccsd(n_modes: int, n_virtuals: int) -> int:
    """CNOT gates for all UVCCSD double excitations: ``48 * C(M, 2) * n**2``."""
    if n_modes < 2 or n_virtuals < 1:
        raise ValidationError("need at least two modes and one virtual modal")
    return 48 * math.comb(n_modes, 2) * n_virtuals**2
