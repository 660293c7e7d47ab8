"""Pauli strings in symplectic form.

A string on ``n`` qubits is stored as two integer bitmasks ``x`` and ``z``;
bit ``k`` describes qubit ``k``. The operator represented is
``i**popcount(x & z) * X**x Z**z`` so that ``x = z = 1`` is exactly ``Y``.
Text rendering lists qubit 0 first.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import _io
from .errors import HermiticityError, ValidationError

_LETTERS = "IXZY"  # index = x + 2 z
_CODES = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}

#: imaginary residue above which complex coefficients are rejected
IMAG_TOL = 1e-10


@dataclass(frozen=True, order=False)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be positive")
        mask = (1 << self.n_qubits) - 1
        if self.x & ~mask or self.z & ~mask or self.x < 0 or self.z < 0:
            raise ValidationError("bitmask has bits beyond n_qubits")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        label = label.strip()
        if not label:
            raise ValidationError("empty Pauli label")
        x = z = 0
        for k, ch in enumerate(label):
            try:
                xb, zb = _CODES[ch]
            except KeyError:
                raise ValidationError(f"invalid Pauli letter {ch!r} in {label!r}") from None
            x |= xb << k
            z |= zb << k
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        xb, zb = _CODES[letter]
        return cls(n_qubits, xb << qubit, zb << qubit)

    def __str__(self) -> str:
        return "".join(_LETTERS[((self.x >> k) & 1) + 2 * ((self.z >> k) & 1)]
                       for k in range(self.n_qubits))

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def letter(self, qubit: int) -> str:
        return _LETTERS[((self.x >> qubit) & 1) + 2 * ((self.z >> qubit) & 1)]

    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return not (self.x or self.z)

    def to_matrix(self) -> np.ndarray:
        """Dense matrix, basis index bit ``k`` = qubit ``k``."""
        dim = 1 << self.n_qubits
        idx = np.arange(dim, dtype=np.int64)
        cols = idx
        rows = idx ^ self.x
        # P|b> = i^{|x&z|} (-1)^{|z&b|} |b ^ x>
        signs = 1 - 2 * (np.bitwise_count(idx & self.z).astype(np.int64) & 1)
        phase = 1j ** ((self.x & self.z).bit_count() % 4)
        mat = np.zeros((dim, dim), dtype=complex)
        mat[rows, cols] = phase * signs
        return mat


def _check_sizes(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValidationError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")


_PHASES = (1, 1j, -1, -1j)


def multiply(a: PauliString, b: PauliString) -> tuple[PauliString, complex]:
    """Return ``(c, phase)`` with ``a @ b == phase * c``; phase is one of 1, i, -1, -i."""
    _check_sizes(a, b)
    x = a.x ^ b.x
    z = a.z ^ b.z
    k = ((a.x & a.z).bit_count() + (b.x & b.z).bit_count() - (x & z).bit_count()
         + 2 * (a.z & b.x).bit_count())
    return PauliString(a.n_qubits, x, z), _PHASES[k % 4]


def qubit_wise_commute(a: PauliString, b: PauliString) -> bool:
    """True when on every qubit the factors are equal or one of them is the identity."""
    _check_sizes(a, b)
    both = a.support & b.support
    return not ((a.x ^ b.x) & both or (a.z ^ b.z) & both)


def fully_commute(a: PauliString, b: PauliString) -> bool:
    """True when the symplectic inner product vanishes mod 2."""
    _check_sizes(a, b)
    return not (((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) & 1)


def canonical_key(item: tuple[PauliString, float]):
    string, coeff = item
    return (-abs(coeff), str(string))


@dataclass(frozen=True)
class PauliSum:
    """Real linear combination of Pauli strings plus an identity offset.

    Terms are kept in canonical order: descending ``|coeff|``, ties broken by
    the rendered label.
    """

    n_qubits: int
    terms: tuple[tuple[PauliString, float], ...] = ()
    constant: float = 0.0

    def __post_init__(self):
        seen = set()
        terms = []
        for string, coeff in self.terms:
            if string.n_qubits != self.n_qubits:
                raise ValidationError("term qubit count differs from PauliSum")
            if string.is_identity():
                raise ValidationError("identity string belongs in the constant")
            if string in seen:
                raise ValidationError(f"duplicate string {string}")
            seen.add(string)
            terms.append((string, float(coeff)))
        terms.sort(key=canonical_key)
        object.__setattr__(self, "terms", tuple(terms))
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def from_mapping(cls, n_qubits: int, coeffs: Mapping[PauliString, complex],
                     constant: float = 0.0, drop_zeros: bool = True) -> "PauliSum":
        """Build from possibly complex coefficients; identity entries join the constant."""
        terms = []
        constant = complex(constant)
        for string, c in coeffs.items():
            c = complex(c)
            if abs(c.imag) >= IMAG_TOL:
                raise HermiticityError(
                    f"coefficient of {string} has imaginary part {c.imag:.3g}")
            if string.is_identity():
                constant += c.real
            elif c.real != 0.0 or not drop_zeros:
                terms.append((string, c.real))
        return cls(n_qubits, tuple(terms), constant.real)

    def __len__(self) -> int:
        return len(self.terms)

    def coefficient(self, string: PauliString) -> float:
        if string.is_identity():
            return self.constant
        for s, c in self.terms:
            if s == string:
                return c
        return 0.0

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        mat = self.constant * np.eye(dim, dtype=complex)
        for string, coeff in self.terms:
            mat += coeff * string.to_matrix()
        return mat

    def to_text(self) -> str:
        lines = [f"# n_qubits {self.n_qubits}"]
        lines.append(f"{_io.format_float(self.constant)} {'I' * self.n_qubits}")
        lines.extend(f"{_io.format_float(c)} {s}" for s, c in self.terms)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        coeffs: dict[PauliString, float] = {}
        constant = 0.0
        n_qubits = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValidationError(f"line {lineno}: expected '<coeff> <string>'")
            try:
                coeff = float(parts[0])
            except ValueError:
                raise ValidationError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
            string = PauliString.from_label(parts[1])
            if n_qubits is None:
                n_qubits = string.n_qubits
            elif string.n_qubits != n_qubits:
                raise ValidationError(f"line {lineno}: inconsistent string length")
            if string.is_identity():
                constant += coeff
            elif string in coeffs:
                raise ValidationError(f"line {lineno}: duplicate string {parts[1]}")
            else:
                coeffs[string] = coeff
        if n_qubits is None:
            raise ValidationError("no terms found")
        return cls(n_qubits, tuple(coeffs.items()), constant)

    def save(self, path) -> None:
        _io.atomic_write_text(path, self.to_text())

    @classmethod
    def load(cls, path) -> "PauliSum":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def sum_terms(n_qubits: int, items: Iterable[tuple[PauliString, float]]) -> PauliSum:
    """Combine like strings from an iterable of ``(string, coeff)`` pairs."""
    acc: dict[PauliString, float] = {}
    for s, c in items:
        acc[s] = acc.get(s, 0.0) + c
    return PauliSum.from_mapping(n_qubits, acc)
