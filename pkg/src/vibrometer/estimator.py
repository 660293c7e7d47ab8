"""Shot allocation, runtime model and cross-coordinate reduction reports."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .encode import cnot_count_uvccsd
from .errors import ValidationError
from .group import GroupingResult

#: default target precision: 1.6 mHartree expressed in the Hamiltonian's unit
DEFAULT_EPSILON = 1.6e-3
DEFAULT_TCNOT_US = 1.0

CSV_FIELDS = ("label", "sum_sqrt_var", "total_shots", "circuit_time_us", "total_time_min")


def optimal_shot_count(variances: Sequence[float], epsilon: float) -> int:
    """``ceil((sum_a sqrt(V_a) / epsilon)**2)``."""
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    ratio = (sum(math.sqrt(v) for v in variances) / epsilon) ** 2
    # absorb round-off so that exact integers do not round up
    return math.ceil(ratio * (1.0 - 1e-12))


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer split of ``total`` proportional to ``weights`` with at least one each."""
    n = len(weights)
    shots = np.zeros(n, dtype=np.int64)
    pinned = np.zeros(n, dtype=bool)
    # groups whose share falls below one shot are pinned at one; the rest is re-split
    while True:
        free = ~pinned
        budget = total - int(pinned.sum())
        quota = np.zeros(n)
        quota[free] = budget * weights[free] / weights[free].sum()
        newly = free & (quota < 1.0)
        if not newly.any():
            break
        pinned |= newly
    shots[pinned] = 1
    floors = np.floor(quota[free]).astype(np.int64)
    shots[free] = floors
    left = total - int(shots.sum())
    if left > 0:
        rema = quota - np.floor(quota)
        rema[pinned] = -1.0
        # stable: ties go to the earlier group
        order = np.argsort(-rema, kind="stable")
        shots[order[:left]] += 1
    return shots


@dataclass(frozen=True)
class MeasurementPlan:
    groups: GroupingResult | None
    variances: tuple[float, ...]
    epsilon: float
    shots: tuple[int, ...]
    total_shots: int

    @property
    def sum_sqrt_var(self) -> float:
        return float(sum(math.sqrt(v) for v in self.variances))

    @property
    def n_groups(self) -> int:
        return len(self.variances)


def allocate(variances: Sequence[float], epsilon: float) -> tuple[tuple[int, ...], int]:
    """Shots per group for target precision ``epsilon``.

    The groups with positive variance share ``ceil((sum sqrt(V)/epsilon)^2)``
    shots in proportion to ``sqrt(V)`` (largest remainder, at least one each);
    every zero-variance group receives one additional shot.
    """
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    var = np.asarray(variances, dtype=float)
    if np.any(var < 0) or not np.all(np.isfinite(var)):
        raise ValidationError("variances must be finite and non-negative")
    shots = np.ones(len(var), dtype=np.int64)
    active = var > 0
    if active.any():
        base = max(optimal_shot_count(var[active], epsilon), int(active.sum()))
        shots[active] = _largest_remainder(np.sqrt(var[active]), base)
    return tuple(int(s) for s in shots), int(shots.sum())


def make_plan(groups: GroupingResult | None, variances: Sequence[float],
              epsilon: float = DEFAULT_EPSILON) -> MeasurementPlan:
    if groups is not None and len(groups) != len(variances):
        raise ValidationError("one variance per group required")
    shots, total = allocate(variances, epsilon)
    return MeasurementPlan(groups, tuple(float(v) for v in variances), float(epsilon),
                           shots, total)


@dataclass(frozen=True)
class RuntimeReport:
    plan: MeasurementPlan
    n_modes: int
    n_virtuals: int
    t_cnot_us: float
    circuit_time_us: float
    total_time_us: float
    label: str = ""
    molecule: str = ""

    @property
    def total_shots(self) -> int:
        return self.plan.total_shots

    @property
    def sum_sqrt_var(self) -> float:
        return self.plan.sum_sqrt_var

    @property
    def total_time_s(self) -> float:
        return self.total_time_us * 1e-6

    @property
    def total_time_min(self) -> float:
        return self.total_time_s / 60.0

    def csv_row(self) -> dict:
        return {
            "label": self.label,
            "sum_sqrt_var": self.sum_sqrt_var,
            "total_shots": self.total_shots,
            "circuit_time_us": self.circuit_time_us,
            "total_time_min": self.total_time_min,
        }


def runtime(plan: MeasurementPlan, n_modes: int, n_virtuals: int,
            t_cnot_us: float = DEFAULT_TCNOT_US, label: str = "",
            molecule: str = "") -> RuntimeReport:
    """``t = total_shots * T_circuit`` with ``T_circuit = 48 C(M,2) n^2 t_cnot``."""
    if t_cnot_us <= 0:
        raise ValidationError("t_cnot must be positive")
    circuit = cnot_count_uvccsd(n_modes, n_virtuals) * float(t_cnot_us)
    return RuntimeReport(plan, n_modes, n_virtuals, float(t_cnot_us), circuit,
                         plan.total_shots * circuit, label, molecule)


@dataclass(frozen=True)
class ReductionReport:
    reduction: float
    ranking: tuple[tuple[str, float], ...]  # (label, (sum sqrt var)^2), best first
    excluded: tuple[str, ...] = field(default=())

    @property
    def best(self) -> str:
        return self.ranking[0][0]

    @property
    def worst(self) -> str:
        return self.ranking[-1][0]

    def table(self) -> str:
        width = max([len("label")] + [len(l) for l, _ in self.ranking])
        lines = [f"{'rank':>4}  {'label':<{width}}  {'(sum sqrt var)^2':>18}"]
        for k, (label, value) in enumerate(self.ranking, 1):
            lines.append(f"{k:>4}  {label:<{width}}  {value:>18.10g}")
        lines.append(f"reduction (max/min) = {self.reduction:.6g}")
        if self.excluded:
            lines.append("excluded: " + ", ".join(self.excluded))
        return "\n".join(lines)


def reduction_report(reports: Sequence[RuntimeReport],
                     exclude: Sequence[str] = ()) -> ReductionReport:
    """Compare coordinate systems by ``(sum_a sqrt(V_a))**2``.

    The reduction is ``max / min`` over the non-excluded labels, so it is at
    least one and larger values mean a larger saving from the best coordinates.
    """
    tags = {r.molecule for r in reports}
    if len(tags) > 1:
        raise ValidationError(f"reports belong to different molecules: {sorted(tags)}")
    excluded = tuple(sorted({r.label for r in reports if r.label in set(exclude)}))
    kept = [r for r in reports if r.label not in set(exclude)]
    if len(kept) < 2:
        raise ValidationError("need at least two coordinate systems to compare")
    labels = [r.label for r in kept]
    if len(set(labels)) != len(labels):
        raise ValidationError("duplicate coordinate labels")
    values = [(r.label, r.sum_sqrt_var ** 2) for r in kept]
    ranking = tuple(sorted(values, key=lambda lv: (lv[1], lv[0])))
    lo, hi = ranking[0][1], ranking[-1][1]
    if hi == lo:
        reduction = 1.0
    elif lo == 0.0:
        reduction = math.inf
    else:
        reduction = hi / lo
    return ReductionReport(reduction, ranking, excluded)


def reports_to_csv(reports: Sequence[RuntimeReport], extra: Sequence[str] = (),
                   rows_extra: Sequence[dict] | None = None,
                   header_comments: Sequence[str] = ()) -> str:
    """CSV text with optional ``# key=value`` header comments and extra columns."""
    from ._io import format_float

    buf = io.StringIO()
    for line in header_comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(CSV_FIELDS) + list(extra))
    for k, r in enumerate(reports):
        row = r.csv_row()
        cells = [row["label"], format_float(row["sum_sqrt_var"]), str(row["total_shots"]),
                 format_float(row["circuit_time_us"]), format_float(row["total_time_min"])]
        if rows_extra is not None:
            cells += [str(rows_extra[k][name]) for name in extra]
        writer.writerow(cells)
    return buf.getvalue()
