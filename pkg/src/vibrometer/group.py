"""Partitioning a qubit Hamiltonian into simultaneously measurable groups.

Two families are provided:

* :func:`sorted_insertion`: greedy grouping in descending ``|coeff|`` order
  under qubit-wise (QWC) or full (FC) commutativity.
* :func:`mcr_sorted_insertion`: first packs mode combinations with disjoint
  modes into sets (:func:`mcr_partition`), then runs sorted insertion inside
  each set.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import _io
from .encode import QubitLayout
from .errors import ValidationError
from .pauli import PauliString, PauliSum, canonical_key, fully_commute, qubit_wise_commute


class Scheme(str, enum.Enum):
    QWC = "QWC"
    FC = "FC"

    @property
    def predicate(self):
        return qubit_wise_commute if self is Scheme.QWC else fully_commute


#: CLI spelling -> (commutation scheme, use MCR pre-partition)
SCHEME_NAMES = {
    "qwc": (Scheme.QWC, False),
    "fc": (Scheme.FC, False),
    "qwc-mcr": (Scheme.QWC, True),
    "fc-mcr": (Scheme.FC, True),
}


def scheme_label(scheme: Scheme, mcr: bool) -> str:
    return f"{scheme.value}/MCR" if mcr else scheme.value


@dataclass(frozen=True)
class MeasurementGroup:
    members: tuple[tuple[PauliString, float], ...]
    scheme: Scheme
    tag: str | None = None

    @property
    def n_qubits(self) -> int:
        return self.members[0][0].n_qubits

    def __len__(self) -> int:
        return len(self.members)

    def is_valid(self) -> bool:
        pred = self.scheme.predicate
        strings = [s for s, _ in self.members]
        return all(pred(a, b) for i, a in enumerate(strings) for b in strings[i + 1:])

    def as_pauli_sum(self) -> PauliSum:
        return PauliSum(self.n_qubits, self.members)


@dataclass(frozen=True)
class GroupingResult:
    groups: tuple[MeasurementGroup, ...]
    scheme: str

    @property
    def covered_terms(self) -> int:
        return sum(len(g) for g in self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    def to_json(self) -> dict:
        return {
            "scheme": self.scheme,
            "groups": [
                {"tag": g.tag or "",
                 "terms": [{"coeff": c, "pauli": str(s)} for s, c in g.members]}
                for g in self.groups
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "GroupingResult":
        try:
            scheme_name = data["scheme"]
            scheme = Scheme(scheme_name.split("/")[0])
            groups = []
            for g in data["groups"]:
                members = tuple((PauliString.from_label(t["pauli"]), float(t["coeff"]))
                                for t in g["terms"])
                if not members:
                    raise ValidationError("empty group in grouping document")
                groups.append(MeasurementGroup(members, scheme, g.get("tag") or None))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed grouping document: {exc}") from exc
        return cls(tuple(groups), scheme_name)

    def save(self, path) -> None:
        _io.write_json(path, self.to_json())

    @classmethod
    def load(cls, path) -> "GroupingResult":
        return cls.from_json(_io.read_json(path))


class _QwcBucket:
    """Open group under QWC; members agree letter-by-letter on overlaps, so the
    union of their letters decides compatibility in O(1)."""

    def __init__(self, string: PauliString, coeff: float):
        self.members = [(string, coeff)]
        self.x, self.z, self.support = string.x, string.z, string.support

    def accepts(self, s: PauliString) -> bool:
        overlap = self.support & s.support
        return not (((self.x ^ s.x) | (self.z ^ s.z)) & overlap)

    def add(self, s: PauliString, coeff: float) -> None:
        self.members.append((s, coeff))
        self.x |= s.x
        self.z |= s.z
        self.support |= s.support


class _FcBucket:
    def __init__(self, string: PauliString, coeff: float):
        self.members = [(string, coeff)]

    def accepts(self, s: PauliString) -> bool:
        sx, sz = s.x, s.z
        for m, _ in self.members:
            if ((m.x & sz).bit_count() + (m.z & sx).bit_count()) & 1:
                return False
        return True

    def add(self, s: PauliString, coeff: float) -> None:
        self.members.append((s, coeff))


def _sorted_insertion_groups(terms, scheme: Scheme, tag: str | None) -> list[MeasurementGroup]:
    bucket_cls = _QwcBucket if scheme is Scheme.QWC else _FcBucket
    buckets: list = []
    for string, coeff in sorted(terms, key=canonical_key):
        for bucket in buckets:
            if bucket.accepts(string):
                bucket.add(string, coeff)
                break
        else:
            buckets.append(bucket_cls(string, coeff))
    return [MeasurementGroup(tuple(b.members), scheme, tag) for b in buckets]


def sorted_insertion(ham: PauliSum, scheme: Scheme | str) -> GroupingResult:
    """Greedy grouping: each term, in descending ``|coeff|`` order (ties by label),
    joins the first existing group it commutes with, or opens a new one.

    The identity component is not grouped.
    """
    scheme = Scheme(scheme)
    groups = _sorted_insertion_groups(ham.terms, scheme, None)
    return GroupingResult(tuple(groups), scheme.value)


@dataclass(frozen=True)
class McrSet:
    label: str
    combinations: tuple[tuple[int, ...], ...]
    terms: PauliSum


def _attribute(ham: PauliSum, layout: QubitLayout):
    if ham.n_qubits != layout.n_qubits:
        raise ValidationError(
            f"Pauli sum has {ham.n_qubits} qubits but the layout has {layout.n_qubits}")
    by_mc: dict[tuple[int, ...], list] = {}
    for string, coeff in ham.terms:
        by_mc.setdefault(layout.modes_of(string), []).append((string, coeff))
    return by_mc


def mcr_partition(ham: PauliSum, layout: QubitLayout,
                  mcr: set[tuple[int, ...]] | None = None) -> list[McrSet]:
    """Pack mode combinations with disjoint modes into jointly measurable sets.

    Every term is attributed to the combination of modes its qubits touch. When
    ``mcr`` is given, that combination must lie within one of its members.
    Multi-mode combinations are packed greedily, highest coupling order first and
    then by descending total ``|coeff|``; each set is seeded with the first
    unassigned combination and filled first-fit with combinations disjoint from
    everything already in it. All one-mode combinations share the final set.
    """
    by_mc = _attribute(ham, layout)
    if mcr is not None:
        allowed = [frozenset(mc) for mc in mcr]
        for mc in by_mc:
            if not any(set(mc) <= a for a in allowed):
                raise ValidationError(
                    f"terms on modes {mc} are not attributable to any mode combination in the MCR")

    weight = {mc: sum(abs(c) for _, c in terms) for mc, terms in by_mc.items()}
    multi = sorted((mc for mc in by_mc if len(mc) >= 2),
                   key=lambda mc: (-len(mc), -weight[mc], mc))
    packed: list[list[tuple[int, ...]]] = []
    assigned: set = set()
    for seed in multi:
        if seed in assigned:
            continue
        members = [seed]
        used = set(seed)
        assigned.add(seed)
        for mc in multi:
            if mc in assigned or used.intersection(mc):
                continue
            members.append(mc)
            used.update(mc)
            assigned.add(mc)
        packed.append(members)
    singles = sorted(mc for mc in by_mc if len(mc) == 1)
    if singles:
        packed.append(singles)

    sets = []
    for k, members in enumerate(packed):
        label = f"S{k}:" + "+".join("(" + ",".join(map(str, mc)) + ")" for mc in members)
        terms = [t for mc in members for t in by_mc[mc]]
        sets.append(McrSet(label, tuple(members), PauliSum(ham.n_qubits, tuple(terms))))
    return sets


def mcr_sorted_insertion(ham: PauliSum, layout: QubitLayout, scheme: Scheme | str,
                         threads: int = 1) -> GroupingResult:
    """MCR pre-partition followed by sorted insertion inside every set.

    Sets are independent and may be grouped concurrently; the output order
    follows the set order regardless of ``threads``.
    """
    scheme = Scheme(scheme)
    sets = mcr_partition(ham, layout)

    def run(s: McrSet):
        return _sorted_insertion_groups(s.terms.terms, scheme, s.label)

    if threads > 1 and len(sets) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_set = list(pool.map(run, sets))
    else:
        per_set = [run(s) for s in sets]
    groups = tuple(g for gs in per_set for g in gs)
    return GroupingResult(groups, scheme_label(scheme, True))


def group_hamiltonian(ham: PauliSum, layout: QubitLayout, name: str,
                      threads: int = 1) -> GroupingResult:
    """Dispatch on a CLI scheme name (``qwc``, ``fc``, ``qwc-mcr``, ``fc-mcr``)."""
    try:
        scheme, use_mcr = SCHEME_NAMES[name.lower()]
    except KeyError:
        raise ValidationError(
            f"unknown scheme {name!r}; choose from {', '.join(SCHEME_NAMES)}") from None
    if use_mcr:
        return mcr_sorted_insertion(ham, layout, scheme, threads=threads)
    return sorted_insertion(ham, scheme)
