"""Synthetic vibrational Hamiltonians from Taylor-expanded potentials.

Coordinates are dimensionless and mass weighted with hbar = 1, so one mode reads
``-1/2 d^2/dq^2 + 1/2 omega^2 q^2 + ...``. Operators are represented in the
harmonic-oscillator eigenbasis of each mode, where ``q = (a + a^dag)/sqrt(2 omega)``.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _io
from .errors import ValidationError
from .sopham import ModeBasisSpec, SopHamiltonian, SopTerm

log = logging.getLogger(__name__)

MAX_POWER = 8
MAX_COUPLING = 3

Monomial = tuple[tuple[int, ...], tuple[int, ...]]  # (modes, exponents)


def _ladder(n: int) -> np.ndarray:
    """Annihilation operator truncated to ``n`` levels."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)


def ho_matrix_elements(kind: str, n: int, omega: float, power: int = 1) -> np.ndarray:
    """Matrix of ``q**power`` (``kind="position"``) or ``-1/2 d^2/dq^2`` (``kind="kinetic"``).

    The operator is built in an ``n + power`` level basis and projected, which
    makes every returned entry exact rather than polluted by truncation.
    """
    if n < 1:
        raise ValidationError("basis size must be positive")
    if omega <= 0:
        raise ValidationError("omega must be positive")
    if kind == "position":
        if not 0 <= power <= MAX_POWER:
            raise ValidationError(f"position power must be in 0..{MAX_POWER}")
        big = n + power
        a = _ladder(big)
        q = (a + a.T) / math.sqrt(2.0 * omega)
        return np.linalg.matrix_power(q, power)[:n, :n]
    if kind == "kinetic":
        big = n + 2
        a = _ladder(big)
        # p = i sqrt(omega/2) (a^dag - a);  T = p^2/2 = -(omega/4) (a^dag - a)^2
        d = a.T - a
        return (-(omega / 4.0) * (d @ d))[:n, :n]
    raise ValidationError(f"unknown operator kind {kind!r}")


@dataclass
class TaylorPes:
    """Harmonic frequencies plus anharmonic force constants.

    ``couplings[(modes, exponents)]`` multiplies ``prod q_m**e_m``; modes are
    strictly increasing and every exponent is positive.
    """

    frequencies: tuple[float, ...]
    couplings: dict = field(default_factory=dict)
    max_degree: int = 4

    def __post_init__(self):
        self.frequencies = tuple(float(w) for w in self.frequencies)
        for m, w in enumerate(self.frequencies):
            if not w > 0:
                raise ValidationError(f"frequencies[{m}] must be positive, got {w}")
        clean = {}
        for key, value in self.couplings.items():
            modes, exps = (tuple(int(v) for v in part) for part in key)
            if len(modes) != len(exps) or not modes:
                raise ValidationError(f"coupling {key}: modes and exponents differ in length")
            if len(modes) > MAX_COUPLING:
                raise ValidationError(f"coupling {key} spans more than {MAX_COUPLING} modes")
            if any(b <= a for a, b in zip(modes, modes[1:])):
                raise ValidationError(f"coupling {key}: modes must be strictly increasing")
            if modes[0] < 0 or modes[-1] >= self.mode_count:
                raise ValidationError(f"coupling {key}: mode index out of range")
            if any(e < 1 for e in exps):
                raise ValidationError(f"coupling {key}: exponents must be positive")
            if sum(exps) > self.max_degree:
                raise ValidationError(f"coupling {key} exceeds max degree {self.max_degree}")
            clean[(modes, exps)] = float(value)
        self.couplings = clean

    @property
    def mode_count(self) -> int:
        return len(self.frequencies)

    def polynomial(self) -> dict[tuple[int, ...], float]:
        """Full potential as ``{exponent vector: coefficient}``, harmonic part included."""
        poly: dict[tuple[int, ...], float] = {}
        M = self.mode_count
        for m, w in enumerate(self.frequencies):
            e = [0] * M
            e[m] = 2
            poly[tuple(e)] = poly.get(tuple(e), 0.0) + 0.5 * w * w
        for (modes, exps), c in self.couplings.items():
            e = [0] * M
            for m, k in zip(modes, exps):
                e[m] = k
            poly[tuple(e)] = poly.get(tuple(e), 0.0) + c
        return poly

    def to_json(self) -> dict:
        return {
            "frequencies": list(self.frequencies),
            "max_degree": self.max_degree,
            "couplings": [{"modes": list(m), "exponents": list(e), "value": v}
                          for (m, e), v in sorted(self.couplings.items())],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TaylorPes":
        try:
            couplings = {(tuple(c["modes"]), tuple(c["exponents"])): c["value"]
                         for c in data.get("couplings", [])}
            return cls(tuple(data["frequencies"]), couplings, int(data.get("max_degree", 4)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed PES document: {exc}") from exc


def build_sop(pes: TaylorPes, modals: Sequence[int] | int) -> SopHamiltonian:
    """SOP Hamiltonian of ``pes`` in the harmonic-oscillator basis of each mode."""
    M = pes.mode_count
    if isinstance(modals, int):
        modals = [modals] * M
    basis = ModeBasisSpec(tuple(modals))
    if basis.mode_count != M:
        raise ValidationError(f"{len(modals)} modal counts given for {M} modes")
    terms = []
    for m, (w, n) in enumerate(zip(pes.frequencies, basis.modals)):
        # kinetic + harmonic potential is diagonal in its own eigenbasis
        terms.append(SopTerm(1.0, [(m, np.diag(w * (np.arange(n) + 0.5)))]))
    for (modes, exps), c in sorted(pes.couplings.items()):
        if c == 0.0:
            continue
        factors = [(m, ho_matrix_elements("position", basis.modals[m], pes.frequencies[m], k))
                   for m, k in zip(modes, exps)]
        terms.append(SopTerm(c, factors))
    return SopHamiltonian(basis, 0.0, terms)


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0.0) + ca * cb
    return out


def rotate_coordinates(pes: TaylorPes, rotation: np.ndarray, tol: float = 1e-12) -> TaylorPes:
    """Re-express ``pes`` in coordinates ``q'`` with ``q = R q'``.

    The kinetic operator keeps its form under orthogonal ``R``. Diagonal
    quadratic coefficients of the rotated potential define the new harmonic
    frequencies; off-diagonal quadratic terms become two-mode couplings.
    Monomials touching more than three modes are dropped with a warning.
    Coefficients with ``|c| <= tol * max|c|`` are treated as zero.
    """
    R = np.asarray(rotation, dtype=float)
    M = pes.mode_count
    if R.shape != (M, M):
        raise ValidationError(f"rotation must be {M}x{M}")
    if np.abs(R.T @ R - np.eye(M)).max() > 1e-10:
        raise ValidationError("rotation matrix is not orthogonal")

    # q_m as a linear polynomial in q'
    linear = []
    for m in range(M):
        poly = {}
        for a in range(M):
            if R[m, a] != 0.0:
                e = [0] * M
                e[a] = 1
                poly[tuple(e)] = R[m, a]
        linear.append(poly)

    rotated: dict = {}
    zero = (0,) * M
    for exps, c in pes.polynomial().items():
        term = {zero: c}
        for m, k in enumerate(exps):
            for _ in range(k):
                term = _poly_mul(term, linear[m])
        for e, v in term.items():
            rotated[e] = rotated.get(e, 0.0) + v

    scale = max(abs(v) for v in rotated.values())
    rotated = {e: v for e, v in rotated.items() if abs(v) > tol * scale}

    freqs = []
    for a in range(M):
        e = [0] * M
        e[a] = 2
        k2 = rotated.pop(tuple(e), 0.0)
        if k2 <= 0:
            raise ValidationError(f"rotated coordinate {a} has no confining harmonic term")
        freqs.append(math.sqrt(2.0 * k2))

    couplings = {}
    dropped = 0.0
    for e, v in sorted(rotated.items()):
        modes = tuple(m for m, k in enumerate(e) if k)
        if len(modes) > MAX_COUPLING:
            dropped = max(dropped, abs(v))
            continue
        couplings[(modes, tuple(e[m] for m in modes))] = v
    if dropped:
        log.warning("rotation produced couplings of more than %d modes; dropped terms up to |c| = %.3g",
                    MAX_COUPLING, dropped)
    return TaylorPes(tuple(freqs), couplings, pes.max_degree)


def pair_rotation(n_modes: int, i: int, j: int, angle: float) -> np.ndarray:
    """Givens rotation by ``angle`` (radians) in the plane of modes ``i`` and ``j``."""
    if i == j or not (0 <= i < n_modes and 0 <= j < n_modes):
        raise ValidationError(f"invalid mode pair ({i}, {j})")
    R = np.eye(n_modes)
    c, s = math.cos(angle), math.sin(angle)
    R[i, i] = R[j, j] = c
    R[i, j], R[j, i] = -s, s
    return R


def random_rotation(n_modes: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed special orthogonal matrix."""
    q, r = np.linalg.qr(rng.normal(size=(n_modes, n_modes)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_pes(frequencies: Sequence[float], seed: int, cubic: float = 0.0,
               quartic: float = 0.0, max_coupling: int = MAX_COUPLING) -> TaylorPes:
    """Taylor PES with random cubic and quartic force constants up to ``max_coupling`` modes.

    Constants are drawn uniformly from ``[-s, s]`` with ``s`` scaled by the
    harmonic frequencies of the modes involved. Diagonal quartic constants are
    kept positive so the potential stays bounded from below for small ``cubic``.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    M = len(frequencies)
    w = np.asarray(frequencies, dtype=float)
    couplings: dict[Monomial, float] = {}
    for degree, strength in ((3, cubic), (4, quartic)):
        if strength == 0.0:
            continue
        for modes_count in range(1, min(max_coupling, degree, M) + 1):
            for modes in itertools.combinations(range(M), modes_count):
                for exps in _compositions(degree, modes_count):
                    scale = strength * float(np.prod([w[m] ** (k / 2) for m, k in zip(modes, exps)]))
                    value = rng.uniform(-scale, scale)
                    if degree == 4 and modes_count == 1:
                        value = abs(value)
                    couplings[(modes, exps)] = value
    return TaylorPes(tuple(w), couplings, 4)


def _compositions(total: int, parts: int):
    """Ordered tuples of ``parts`` positive integers summing to ``total``."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[k + 1] - bounds[k] for k in range(parts))


def load_config(path) -> dict:
    return _io.read_json(path)


def pes_from_config(cfg: Mapping) -> TaylorPes:
    """Generator config: ``{"frequencies": [...], "couplings": [...]}`` or a random family
    ``{"frequencies": [...], "random": {"seed": s, "cubic": c, "quartic": d}}``."""
    if "random" in cfg:
        r = cfg["random"]
        return random_pes(cfg["frequencies"], int(r["seed"]), float(r.get("cubic", 0.0)),
                          float(r.get("quartic", 0.0)))
    return TaylorPes.from_json(cfg)
