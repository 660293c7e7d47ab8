"""Dense statevector engine.

Provides FVCI ground states by exact diagonalization in configuration space,
Pauli expectation values, group variances and Monte-Carlo projective sampling
of commuting groups. Basis index bit ``k`` is qubit ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg

from . import _io
from .encode import QubitLayout
from .errors import InvariantViolation, ResourceLimitError, ValidationError
from .group import MeasurementGroup
from .pauli import PauliString, multiply
from .sopham import ExpandedHamiltonian

#: configuration-space dimension cap for dense diagonalization
MAX_FVCI_DIMENSION = 2**14
#: qubit count above which no dense statevector is allocated
MAX_STATE_QUBITS = 26

STATE_MAGIC = b"VIBSTATE"


@lru_cache(maxsize=8)
def _basis_indices(n_qubits: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    idx.setflags(write=False)
    return idx


def _parity(values: np.ndarray, mask: int) -> np.ndarray:
    return np.bitwise_count(values & mask).astype(np.int64) & 1


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits > MAX_STATE_QUBITS:
            raise ResourceLimitError(f"{self.n_qubits} qubits exceeds the statevector cap")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_qubits,):
            raise ValidationError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"state is not normalized (norm {norm:.15g})")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @cached_property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.amplitudes)

    def save(self, path, seed: int | None = None, description: str = "") -> None:
        """Binary little-endian complex128 amplitudes behind an 8-byte magic, plus a JSON sidecar."""
        payload = STATE_MAGIC + self.amplitudes.astype("<c16").tobytes()
        _io.atomic_write_bytes(path, payload)
        _io.write_json(str(path) + ".json",
                       {"n_qubits": self.n_qubits, "seed": seed, "description": description})

    @classmethod
    def load(cls, path) -> "StateVector":
        meta = _io.read_json(str(path) + ".json")
        raw = Path(path).read_bytes()
        if raw[:8] != STATE_MAGIC:
            raise ValidationError(f"{path} is not a state file (bad magic)")
        n_qubits = int(meta["n_qubits"])
        amps = np.frombuffer(raw[8:], dtype="<c16")
        return cls(n_qubits, amps)


def apply_pauli(amplitudes: np.ndarray, string: PauliString) -> np.ndarray:
    """``P |psi>`` for a dense amplitude vector."""
    idx = _basis_indices(string.n_qubits)
    signs = 1 - 2 * _parity(idx, string.z)
    phase = 1j ** ((string.x & string.z).bit_count() % 4)
    # out[b ^ x] = phase * sign(b) * psi[b]
    return phase * (signs * amplitudes)[idx ^ string.x]


def _expect(state: StateVector, string: PauliString) -> complex:
    """``<psi|P|psi>`` summed over the support of ``psi`` only."""
    if string.n_qubits != state.n_qubits:
        raise ValidationError(
            f"state has {state.n_qubits} qubits, string has {string.n_qubits}")
    b = state.support
    psi = state.amplitudes
    signs = 1 - 2 * _parity(b, string.z)
    phase = 1j ** ((string.x & string.z).bit_count() % 4)
    return phase * np.dot(np.conj(psi[b ^ string.x]), signs * psi[b])


def expectation(state: StateVector, string: PauliString) -> float:
    """Real expectation value of a Pauli string."""
    return float(_expect(state, string).real)


def group_variance(state: StateVector, group: MeasurementGroup,
                   cache: dict | None = None) -> float:
    """``<H_a^2> - <H_a>^2`` from pairwise products of the group's Pauli strings.

    ``cache`` may map product strings to expectation values and is shared across
    calls on the same state.
    """
    if cache is None:
        cache = {}

    def ev(s: PauliString) -> complex:
        if s.is_identity():
            return 1.0
        if s not in cache:
            cache[s] = _expect(state, s)
        return cache[s]

    members = group.members
    mean = 0.0
    square = 0.0
    for i, (si, hi) in enumerate(members):
        mean += hi * ev(si).real
        square += hi * hi
        for sj, hj in members[i + 1:]:
            prod, phase = multiply(si, sj)
            # <P_i P_j> + <P_j P_i> = 2 Re <P_i P_j>
            square += 2.0 * hi * hj * (phase * ev(prod)).real
    var = square - mean * mean
    if var < 0.0:
        scale = max(1.0, sum(h * h for _, h in members))
        if var < -1e-10 * scale:
            raise InvariantViolation(f"negative group variance {var:.3g}")
        var = 0.0
    return var


# ---------------------------------------------------------------------------
# FVCI


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    energies: np.ndarray
    config_vector: np.ndarray
    layout: QubitLayout
    residual: float = field(default=0.0)

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    @cached_property
    def ground_state(self) -> StateVector:
        """Lowest eigenvector embedded in the one-hot qubit subspace."""
        n = self.layout.n_qubits
        if n > MAX_STATE_QUBITS:
            raise ResourceLimitError(f"embedding needs 2^{n} amplitudes")
        amps = np.zeros(1 << n, dtype=complex)
        amps[self.layout.onehot_indices()] = self.config_vector
        return StateVector(n, amps)


def fvci_ground_state(ham: ExpandedHamiltonian, layout: QubitLayout | None = None,
                      max_dimension: int = MAX_FVCI_DIMENSION) -> SpectrumResult:
    """Exact diagonalization of the configuration-space Hamiltonian."""
    if layout is None:
        layout = QubitLayout(ham.basis)
    elif layout.basis != ham.basis:
        raise ValidationError("layout and Hamiltonian bases differ")
    dim = ham.basis.dimension
    if dim > max_dimension:
        raise ResourceLimitError(f"configuration dimension {dim} exceeds the cap of {max_dimension}")
    mat = ham.to_dense()
    asym = float(np.abs(mat - mat.T).max()) if dim else 0.0
    if asym > 1e-10:
        raise ValidationError(f"Hamiltonian matrix is not symmetric (max deviation {asym:.3g})")
    energies, vectors = scipy.linalg.eigh(mat)
    v = vectors[:, 0].copy()
    # fix the arbitrary eigenvector sign: largest component positive
    k = int(np.argmax(np.abs(v)))
    if v[k] < 0:
        v = -v
    v /= np.linalg.norm(v)
    residual = float(np.linalg.norm(mat @ v - energies[0] * v))
    scale = max(1.0, float(np.abs(mat).max()))
    if residual > 1e-9 * scale:
        raise InvariantViolation(f"eigen-residual {residual:.3g} too large")
    return SpectrumResult(energies, v, layout, residual)


# ---------------------------------------------------------------------------
# projective sampling


class _OutcomeTree:
    """Conditional +1 probabilities for measuring the members in order.

    Node ``k`` at depth ``d`` holds the post-measurement state after ``d``
    outcomes; its children are the states projected onto ``P_d = +-1``.
    """

    def __init__(self, amplitudes: np.ndarray, strings: list[PauliString], max_nodes: int):
        self.p_plus: list[float] = []
        self.children: list[list[int]] = []
        self._strings = strings
        self._max_nodes = max_nodes
        self._build(amplitudes, 0)

    def _build(self, psi: np.ndarray, depth: int) -> int:
        node = len(self.p_plus)
        if node >= self._max_nodes:
            raise ResourceLimitError("measurement outcome tree grew beyond its cap")
        self.p_plus.append(1.0)
        self.children.append([-1, -1])
        if depth == len(self._strings):
            return node
        p_psi = apply_pauli(psi, self._strings[depth])
        ev = float(np.vdot(psi, p_psi).real)
        p = min(1.0, max(0.0, 0.5 * (1.0 + ev)))
        if p < 1e-12:
            p = 0.0
        elif p > 1.0 - 1e-12:
            p = 1.0
        self.p_plus[node] = p
        for branch, (sign, prob) in enumerate(((1.0, p), (-1.0, 1.0 - p))):
            if prob == 0.0:
                continue
            child = 0.5 * (psi + sign * p_psi)
            norm = np.linalg.norm(child)
            child /= norm
            if abs(np.linalg.norm(child) - 1.0) > 1e-10:
                raise InvariantViolation("projected state lost normalization")
            self.children[node][branch] = self._build(child, depth + 1)
        return node


def sample_group(state: StateVector, group: MeasurementGroup, shots: int, seed: int,
                 max_nodes: int = 1 << 16) -> np.ndarray:
    """Per-shot energies ``sum_i h_i * lambda_i`` from sequential projective measurement.

    Members are measured in their stored order: for each, the +1 outcome is
    drawn with probability ``(1 + <P>)/2`` on the current post-measurement
    state, which is then projected and renormalized. The conditional states
    depend only on the outcome history, so they are computed once and reused
    across shots. The random stream is a Philox generator keyed by ``seed``.
    """
    if shots <= 0:
        raise ValidationError("shots must be positive")
    strings = [s for s, _ in group.members]
    coeffs = np.array([h for _, h in group.members])
    if any(s.n_qubits != state.n_qubits for s in strings):
        raise ValidationError("group and state qubit counts differ")
    tree = _OutcomeTree(np.array(state.amplitudes), strings, max_nodes)
    p_plus = np.array(tree.p_plus)
    children = np.array(tree.children, dtype=np.int64)

    rng = np.random.Generator(np.random.Philox(seed))
    draws = rng.random((shots, len(strings)))
    node = np.zeros(shots, dtype=np.int64)
    energy = np.zeros(shots)
    for d in range(len(strings)):
        plus = draws[:, d] < p_plus[node]
        energy += np.where(plus, coeffs[d], -coeffs[d])
        node = np.where(plus, children[node, 0], children[node, 1])
    return energy


def energy_expectation(state: StateVector, terms, constant: float = 0.0) -> float:
    """``<psi|H|psi>`` for ``H = constant + sum h_i P_i``."""
    return constant + sum(h * expectation(state, s) for s, h in terms)


def read_seed(path) -> int | None:
    meta = _io.read_json(str(path) + ".json")
    return meta.get("seed")

