"""Sum-of-products vibrational Hamiltonians and their second-quantized expansion.

A :class:`SopHamiltonian` stores ``constant + sum_t c_t prod_m h^{m,t}`` where each
``h^{m,t}`` is a real symmetric matrix in the modal basis of mode ``m``. Expanding
it multiplies out every product into strings ``prod_m a^dag_{p_m} a_{q_m}`` and
aggregates the coefficients of strings that share a mode combination.

Configuration-space matrices use C ordering over modes: mode 0 is the most
significant digit of the configuration index.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _io
from .errors import HermiticityError, ResourceLimitError, ValidationError

#: largest configuration-space dimension accepted anywhere in the package
MAX_DIMENSION = 2**20

ModeCombination = tuple[int, ...]
IndexPairs = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ModeBasisSpec:
    """Number of modals for every vibrational mode."""

    modals: tuple[int, ...]

    def __post_init__(self):
        modals = tuple(int(n) for n in self.modals)
        object.__setattr__(self, "modals", modals)
        if len(modals) < 1:
            raise ValidationError("basis needs at least one mode")
        if any(n < 1 for n in modals):
            raise ValidationError(f"every mode needs at least one modal, got {list(modals)}")
        dim = 1
        for n in modals:
            dim *= n
            if dim > MAX_DIMENSION:
                raise ResourceLimitError(
                    f"configuration-space dimension exceeds the cap of {MAX_DIMENSION}")

    @classmethod
    def uniform(cls, mode_count: int, n_modals: int) -> "ModeBasisSpec":
        return cls((n_modals,) * mode_count)

    @property
    def mode_count(self) -> int:
        return len(self.modals)

    @property
    def dimension(self) -> int:
        return math.prod(self.modals)

    def config_index(self, occupation: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(occupation), self.modals))

    def configurations(self) -> Iterator[tuple[int, ...]]:
        """All configurations in configuration-index order."""
        return itertools.product(*(range(n) for n in self.modals))


@dataclass(frozen=True)
class SopTerm:
    coeff: float
    factors: tuple[tuple[int, np.ndarray], ...]

    def __post_init__(self):
        factors = tuple((int(m), np.array(h, dtype=float)) for m, h in self.factors)
        for _, h in factors:
            h.setflags(write=False)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coeff", float(self.coeff))

    @property
    def modes(self) -> ModeCombination:
        return tuple(m for m, _ in self.factors)


@dataclass(frozen=True)
class SopHamiltonian:
    basis: ModeBasisSpec
    constant: float = 0.0
    terms: tuple[SopTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "terms", tuple(self.terms))
        for t, term in enumerate(self.terms):
            _validate_term(term, self.basis, t)

    def __add__(self, other: "SopHamiltonian") -> "SopHamiltonian":
        if self.basis != other.basis:
            raise ValidationError("cannot add Hamiltonians over different bases")
        return SopHamiltonian(self.basis, self.constant + other.constant,
                              self.terms + other.terms)

    def to_dense(self) -> np.ndarray:
        """Configuration-space matrix assembled term by term from Kronecker products."""
        modals = self.basis.modals
        mat = self.constant * np.eye(self.basis.dimension)
        for term in self.terms:
            ops = [np.eye(n) for n in modals]
            for m, h in term.factors:
                ops[m] = h
            prod = ops[0]
            for op in ops[1:]:
                prod = np.kron(prod, op)
            mat += term.coeff * prod
        return mat

    def to_json(self) -> dict:
        return {
            "modes": self.basis.mode_count,
            "modals": list(self.basis.modals),
            "constant": self.constant,
            "terms": [
                {"coeff": t.coeff,
                 "factors": [{"mode": m, "matrix": h.tolist()} for m, h in t.factors]}
                for t in self.terms
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SopHamiltonian":
        try:
            basis = _basis_from_json(data)
            terms = [
                SopTerm(t["coeff"], [(f["mode"], f["matrix"]) for f in t["factors"]])
                for t in data.get("terms", [])
            ]
            return cls(basis, data.get("constant", 0.0), terms)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed SOP document: {exc}") from exc

    def save(self, path) -> None:
        _io.write_json(path, self.to_json())

    @classmethod
    def load(cls, path) -> "SopHamiltonian":
        return cls.from_json(_io.read_json(path))


def _basis_from_json(data: dict) -> ModeBasisSpec:
    basis = ModeBasisSpec(tuple(data["modals"]))
    if "modes" in data and int(data["modes"]) != basis.mode_count:
        raise ValidationError(
            f"'modes' is {data['modes']} but 'modals' lists {basis.mode_count} modes")
    return basis


def _validate_term(term: SopTerm, basis: ModeBasisSpec, t: int) -> None:
    if not term.factors:
        raise ValidationError(f"term {t} has no factors; fold it into the constant")
    modes = term.modes
    if any(b <= a for a, b in zip(modes, modes[1:])):
        raise ValidationError(f"term {t}: factor modes must be strictly increasing, got {modes}")
    for m, h in term.factors:
        if not 0 <= m < basis.mode_count:
            raise ValidationError(f"term {t}: mode {m} outside 0..{basis.mode_count - 1}")
        n = basis.modals[m]
        if h.shape != (n, n):
            raise ValidationError(
                f"term {t}: matrix for mode {m} has shape {h.shape}, expected ({n}, {n})")
        if not np.all(np.isfinite(h)):
            raise ValidationError(f"term {t}: matrix for mode {m} has non-finite entries")
        scale = max(1.0, float(np.abs(h).max()))
        if np.abs(h - h.T).max() > 1e-12 * scale:
            raise ValidationError(f"term {t}: matrix for mode {m} is not symmetric")
        if np.array_equal(h, np.eye(n)):
            raise ValidationError(
                f"term {t}: explicit identity factor on mode {m}; absorb it before expanding")


# ---------------------------------------------------------------------------
# expanded form


def _block_shape(modals: Sequence[int], mc: ModeCombination) -> int:
    return math.prod(modals[m] for m in mc)


@dataclass(frozen=True)
class ExpandedHamiltonian:
    """Aggregated second-quantized strings, stored as one dense block per mode combination.

    ``blocks[mc][row, col]`` is the coefficient of the string whose creation
    indices are ``row`` and annihilation indices are ``col``, each unravelled in
    C order over the modes of ``mc``. Zero entries are not part of the string
    list.
    """

    basis: ModeBasisSpec
    constant: float = 0.0
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "constant", float(self.constant))
        blocks = {}
        for mc in sorted(self.blocks):
            block = np.array(self.blocks[mc], dtype=float)
            mc = tuple(int(m) for m in mc)
            if not mc or any(b <= a for a, b in zip(mc, mc[1:])) \
                    or mc[0] < 0 or mc[-1] >= self.basis.mode_count:
                raise ValidationError(f"invalid mode combination {mc}")
            size = _block_shape(self.basis.modals, mc)
            if block.shape != (size, size):
                raise ValidationError(f"block {mc} has shape {block.shape}, expected ({size}, {size})")
            if not block.any():
                continue
            scale = max(1.0, float(np.abs(block).max()))
            if np.abs(block - block.T).max() > 1e-12 * scale:
                raise HermiticityError(f"block {mc} is not symmetric (string and transpose differ)")
            block.setflags(write=False)
            blocks[mc] = block
        object.__setattr__(self, "blocks", blocks)

    def strings(self) -> Iterator[tuple[ModeCombination, IndexPairs, float]]:
        """Retained strings in lexicographic order of (mode combination, index pairs)."""
        modals = self.basis.modals
        for mc, block in self.blocks.items():
            dims = [modals[m] for m in mc]
            k = len(mc)
            tensor = block.reshape(dims + dims)
            # axes ordered (p0, q0, p1, q1, ...)
            order = [ax for i in range(k) for ax in (i, k + i)]
            tensor = tensor.transpose(order)
            for flat in np.flatnonzero(tensor):
                idx = np.unravel_index(flat, tensor.shape)
                pq = tuple((int(idx[2 * i]), int(idx[2 * i + 1])) for i in range(k))
                yield mc, pq, float(tensor.flat[flat])

    @property
    def n_strings(self) -> int:
        return sum(int(np.count_nonzero(b)) for b in self.blocks.values())

    @classmethod
    def from_strings(cls, basis: ModeBasisSpec, constant: float,
                     strings: Iterable[tuple[Sequence[int], Sequence[Sequence[int]], float]]
                     ) -> "ExpandedHamiltonian":
        modals = basis.modals
        blocks: dict[ModeCombination, np.ndarray] = {}
        seen: set = set()
        for modes, pq, coeff in strings:
            mc = tuple(int(m) for m in modes)
            pq = tuple((int(p), int(q)) for p, q in pq)
            if len(pq) != len(mc):
                raise ValidationError(f"string on modes {mc} has {len(pq)} index pairs")
            if any(not 0 <= m < basis.mode_count for m in mc):
                raise ValidationError(f"string references modes {mc} outside the basis")
            if any(not (0 <= p < modals[m] and 0 <= q < modals[m]) for m, (p, q) in zip(mc, pq)):
                raise ValidationError(f"string indices {pq} out of range for modes {mc}")
            if (mc, pq) in seen:
                raise ValidationError(f"duplicate string {mc} {pq}")
            seen.add((mc, pq))
            if mc not in blocks:
                size = _block_shape(modals, mc)
                blocks[mc] = np.zeros((size, size))
            dims = [modals[m] for m in mc]
            row = np.ravel_multi_index(tuple(p for p, _ in pq), dims) if mc else 0
            col = np.ravel_multi_index(tuple(q for _, q in pq), dims) if mc else 0
            blocks[mc][row, col] = float(coeff)
        return cls(basis, constant, blocks)

    def operator_on_modes(self, mc: ModeCombination) -> np.ndarray:
        return self.blocks[mc]

    def to_dense(self) -> np.ndarray:
        """Configuration-space matrix, embedding each block by tensor transposition."""
        modals = self.basis.modals
        n_modes = self.basis.mode_count
        dim = self.basis.dimension
        mat = self.constant * np.eye(dim)
        for mc, block in self.blocks.items():
            rest = [m for m in range(n_modes) if m not in mc]
            dims_mc = [modals[m] for m in mc]
            dims_rest = [modals[m] for m in rest]
            ident = np.eye(math.prod(dims_rest)).reshape(dims_rest + dims_rest)
            full = np.tensordot(block.reshape(dims_mc + dims_mc), ident, axes=0)
            # current axes: mc rows, mc cols, rest rows, rest cols
            k, r = len(mc), len(rest)
            position = {}
            for i, m in enumerate(mc):
                position[m] = (i, k + i)
            for i, m in enumerate(rest):
                position[m] = (2 * k + i, 2 * k + r + i)
            perm = [position[m][0] for m in range(n_modes)] + [position[m][1] for m in range(n_modes)]
            mat += full.transpose(perm).reshape(dim, dim)
        return mat

    def to_json(self) -> dict:
        return {
            "modes": self.basis.mode_count,
            "modals": list(self.basis.modals),
            "constant": self.constant,
            "strings": [{"modes": list(mc), "pq": [list(p) for p in pq], "coeff": c}
                        for mc, pq, c in self.strings()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ExpandedHamiltonian":
        try:
            basis = _basis_from_json(data)
            strings = [(s["modes"], s["pq"], s["coeff"]) for s in data.get("strings", [])]
            return cls.from_strings(basis, data.get("constant", 0.0), strings)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed expanded-Hamiltonian document: {exc}") from exc

    def save(self, path) -> None:
        _io.write_json(path, self.to_json())

    @classmethod
    def load(cls, path) -> "ExpandedHamiltonian":
        return cls.from_json(_io.read_json(path))


def expand(sop: SopHamiltonian, drop_threshold: float = 0.0) -> ExpandedHamiltonian:
    """Multiply out every SOP product and aggregate coefficients per mode combination.

    Strings whose aggregated ``|coeff| <= drop_threshold`` are dropped; with the
    default threshold of zero only exact cancellations disappear.
    """
    if drop_threshold < 0:
        raise ValidationError("drop_threshold must be non-negative")
    modals = sop.basis.modals
    blocks: dict[ModeCombination, np.ndarray] = {}
    for term in sop.terms:
        mc = term.modes
        prod = term.factors[0][1]
        for _, h in term.factors[1:]:
            prod = np.kron(prod, h)
        if mc not in blocks:
            size = _block_shape(modals, mc)
            blocks[mc] = np.zeros((size, size))
        blocks[mc] += term.coeff * prod
    for block in blocks.values():
        block[np.abs(block) <= drop_threshold] = 0.0
    return ExpandedHamiltonian(sop.basis, sop.constant, blocks)


def count_terms(n_modes: int, n_modals: int, max_coupling: int = 3) -> int:
    """Number of second-quantized strings for a fully coupled Hamiltonian.

    ``sum_{k=1}^{max_coupling} C(n_modes, k) * n_modals**(2k)``.

    >>> count_terms(3, 4)
    4912
    """
    if n_modes < 1 or n_modals < 1:
        raise ValidationError("n_modes and n_modals must be positive")
    if not 1 <= max_coupling <= 3:
        raise ValidationError("max_coupling must be between 1 and 3")
    total = sum(math.comb(n_modes, k) * n_modals ** (2 * k) for k in range(1, max_coupling + 1))
    if total >= 2**63:
        raise OverflowError(f"term count {total} does not fit a signed 64-bit integer")
    return total


def mode_combinations(ham: ExpandedHamiltonian) -> set[ModeCombination]:
    """Mode combinations carrying at least one retained string."""
    return {mc for mc, block in ham.blocks.items() if block.any()}
