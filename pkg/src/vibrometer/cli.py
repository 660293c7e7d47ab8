"""Command-line front end.

Every stage reads and writes the file formats of the library modules, so each
can be run on its own intermediate files:

    synth -> expand -> encode -> group -> variance -> plan

``pipeline`` chains all stages for one Hamiltonian; ``report`` compares
coordinate systems of one molecule.

Exit codes: 0 success, 2 invalid input, 3 size cap exceeded, 4 internal
invariant violated.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _io
from .encode import QubitLayout, encode
from .engine import StateVector, fvci_ground_state, group_variance
from .errors import InvariantViolation, ResourceLimitError, ValidationError, VibrometerError
from .estimator import (DEFAULT_EPSILON, DEFAULT_TCNOT_US, make_plan, reduction_report,
                        reports_to_csv, runtime)
from .group import SCHEME_NAMES, GroupingResult, group_hamiltonian
from .pauli import PauliSum
from .sopham import ExpandedHamiltonian, SopHamiltonian, expand
from .synth import (TaylorPes, build_sop, pair_rotation, pes_from_config, random_pes,
                    random_rotation, rotate_coordinates)

log = logging.getLogger("vibrometer")

EXIT_OK, EXIT_VALIDATION, EXIT_RESOURCE, EXIT_INVARIANT = 0, 2, 3, 4

SCHEMAS = """\
file formats:
  SOP JSON       {"modes": M, "modals": [N_0, ...], "constant": c,
                  "terms": [{"coeff": c_t, "factors": [{"mode": m, "matrix": [[...]]}]}]}
  expanded JSON  {"modes": M, "modals": [...], "constant": c,
                  "strings": [{"modes": [m, ...], "pq": [[p, q], ...], "coeff": h}]}
  Pauli text     one '<coeff> <string>' per line, qubit 0 leftmost, '#' comments,
                 the constant as the all-identity string
  layout JSON    {"modals": [...], "offsets": [...]}
  grouping JSON  {"scheme": "...", "groups": [{"tag": "...", "terms": [{"coeff": h, "pauli": "XIZ"}]}]}
  generator JSON {"frequencies": [...], "couplings": [{"modes": [...], "exponents": [...], "value": v}]}
                 or {"frequencies": [...], "random": {"seed": s, "cubic": c, "quartic": d}}
  report CSV     label,sum_sqrt_var,total_shots,circuit_time_us,total_time_min
environment:
  VIBROMETER_THREADS  default for --threads
"""


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    output: str | None = None
    schemes: list[str] = field(default_factory=lambda: list(SCHEME_NAMES))
    epsilon: float = DEFAULT_EPSILON
    t_cnot_us: float = DEFAULT_TCNOT_US
    seed: int | None = None
    drop_threshold: float = 0.0
    exclude_labels: list[str] = field(default_factory=list)
    threads: int = 1

    def validate(self) -> None:
        if self.epsilon <= 0:
            raise ValidationError("--epsilon must be positive")
        if self.t_cnot_us <= 0:
            raise ValidationError("--tcnot-us must be positive")
        if self.drop_threshold < 0:
            raise ValidationError("--drop-threshold must be non-negative")
        if self.threads < 1:
            raise ValidationError("--threads must be at least 1")
        for name in self.schemes:
            if name not in SCHEME_NAMES:
                raise ValidationError(f"unknown scheme {name!r}; choose from {', '.join(SCHEME_NAMES)}")
        for path in self.inputs:
            if not Path(path).is_file():
                raise ValidationError(f"input file not found: {path}")
        if self.output is not None:
            parent = Path(self.output).parent
            if not parent.is_dir():
                raise ValidationError(f"output directory does not exist: {parent}")


# ---------------------------------------------------------------------------
# helpers


def _floats(text: str, name: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _ints(text: str, name: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"{name}: expected comma-separated integers, got {text!r}") from None


def parse_angle(text: str) -> float:
    """Angle in radians from ``30deg``, ``0.5rad`` or a bare number of radians."""
    t = text.strip().lower()
    try:
        if t.endswith("deg"):
            return math.radians(float(t[:-3]))
        if t.endswith("rad"):
            return float(t[:-3])
        return float(t)
    except ValueError:
        raise ValidationError(f"--rotate: cannot parse angle {text!r}") from None


def load_hamiltonian(path: str, drop_threshold: float = 0.0) -> tuple[ExpandedHamiltonian, dict]:
    """Read an SOP or expanded JSON file; SOP input is expanded on the fly."""
    data = _io.read_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    if "terms" in data:
        return expand(SopHamiltonian.from_json(data), drop_threshold), data
    if "strings" in data:
        return ExpandedHamiltonian.from_json(data), data
    raise ValidationError(f"{path}: neither an SOP ('terms') nor an expanded ('strings') document")


def _virtuals(layout: QubitLayout, override: int | None) -> int:
    if override is not None:
        return override
    return max(layout.basis.modals) - 1


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("VIBROMETER_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"VIBROMETER_THREADS must be an integer, got {env!r}") from None
    return 1


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        _io.atomic_write_text(output, text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    if args.config:
        cfg = _io.read_json(args.config)
        pes = pes_from_config(cfg)
        seed = cfg.get("random", {}).get("seed")
    else:
        if args.harmonic is None:
            raise ValidationError("harmonic: give frequencies with --harmonic or a --config file")
        freqs = _floats(args.harmonic, "harmonic")
        for m, w in enumerate(freqs):
            if not w > 0:
                raise ValidationError(f"harmonic: frequency {m} must be positive, got {w}")
        if args.modes is not None and args.modes != len(freqs):
            raise ValidationError(f"modes: --modes {args.modes} but {len(freqs)} frequencies given")
        seed = args.seed
        if args.cubic or args.quartic:
            pes = random_pes(freqs, seed if seed is not None else 0, args.cubic, args.quartic)
            seed = seed if seed is not None else 0
        else:
            pes = TaylorPes(tuple(freqs))
    M = pes.mode_count

    if args.rotate is not None:
        angle = parse_angle(args.rotate)
        i, j = _ints(args.pair, "pair") if args.pair else (0, 1)
        pes = rotate_coordinates(pes, pair_rotation(M, i, j, angle))
    if args.random_rotation is not None:
        rng = np.random.Generator(np.random.Philox(args.random_rotation))
        pes = rotate_coordinates(pes, random_rotation(M, rng))

    modals = _ints(args.modals, "modals")
    if len(modals) == 1:
        modals = modals * M
    sop = build_sop(pes, modals)
    doc = sop.to_json()
    doc["generator"] = {"pes": pes.to_json(), "seed": seed, "rotate": args.rotate,
                        "pair": args.pair, "random_rotation": args.random_rotation}
    _io.write_json(args.output, doc)
    log.info("wrote SOP Hamiltonian with %d terms to %s", len(sop.terms), args.output)
    return EXIT_OK


def cmd_expand(args) -> int:
    sop = SopHamiltonian.load(args.input)
    ham = expand(sop, args.drop_threshold)
    ham.save(args.output)
    log.info("expanded %d SOP terms into %d strings", len(sop.terms), ham.n_strings)
    return EXIT_OK


def cmd_encode(args) -> int:
    ham, _ = load_hamiltonian(args.input, args.drop_threshold)
    paulis, layout = encode(ham)
    paulis.save(args.output)
    if args.layout:
        layout.save(args.layout)
    log.info("encoded %d strings into %d Pauli terms on %d qubits",
             ham.n_strings, len(paulis), layout.n_qubits)
    return EXIT_OK


def cmd_group(args) -> int:
    paulis = PauliSum.load(args.pauli)
    layout = QubitLayout.load(args.layout)
    result = group_hamiltonian(paulis, layout, args.scheme, threads=args.threads)
    result.save(args.output)
    log.info("%s: %d groups", result.scheme, len(result))
    return EXIT_OK


def cmd_variance(args) -> int:
    grouping = GroupingResult.load(args.grouping)
    if args.state:
        state = StateVector.load(args.state)
        energy = None
    else:
        ham, _ = load_hamiltonian(args.hamiltonian, args.drop_threshold)
        spectrum = fvci_ground_state(ham)
        state = spectrum.ground_state
        energy = spectrum.ground_energy
        if args.save_state:
            state.save(args.save_state, description="FVCI ground state")
    cache: dict = {}
    variances = [group_variance(state, g, cache) for g in grouping.groups]
    _io.write_json(args.output, {
        "scheme": grouping.scheme,
        "state": "FVCI ground state" if energy is not None else str(args.state),
        "ground_energy": energy,
        "groups": [{"tag": g.tag or "", "size": len(g), "variance": v}
                   for g, v in zip(grouping.groups, variances)],
    })
    log.info("sum sqrt(var) = %.10g over %d groups", sum(math.sqrt(v) for v in variances),
             len(variances))
    return EXIT_OK


def cmd_plan(args) -> int:
    doc = _io.read_json(args.variances)
    variances = [float(g["variance"]) for g in doc["groups"]]
    plan = make_plan(None, variances, args.epsilon)
    layout = QubitLayout.from_json({"modals": _ints(args.modals, "modals")})
    report = runtime(plan, layout.basis.mode_count, _virtuals(layout, args.virtuals),
                     args.tcnot_us, label=args.label or doc.get("scheme", ""))
    header = [f"epsilon={args.epsilon!r}", f"t_cnot_us={args.tcnot_us!r}"]
    _emit(reports_to_csv([report], header_comments=header), args.output)
    if args.shots:
        _io.write_json(args.shots, {"epsilon": args.epsilon, "total_shots": plan.total_shots,
                                    "shots": list(plan.shots)})
    return EXIT_OK


def run_pipeline(ham: ExpandedHamiltonian, schemes, epsilon: float, t_cnot_us: float,
                 threads: int = 1, virtuals: int | None = None, label_prefix: str = "",
                 molecule: str = ""):
    """Full chain for one Hamiltonian; returns ``(reports, groupings, spectrum)``."""
    paulis, layout = encode(ham)
    spectrum = fvci_ground_state(ham, layout)
    state = spectrum.ground_state
    n_virt = _virtuals(layout, virtuals)
    cache: dict = {}
    reports, groupings = [], []
    for name in schemes:
        grouping = group_hamiltonian(paulis, layout, name, threads=threads)
        variances = [group_variance(state, g, cache) for g in grouping.groups]
        plan = make_plan(grouping, variances, epsilon)
        reports.append(runtime(plan, layout.basis.mode_count, n_virt, t_cnot_us,
                               label=label_prefix + name, molecule=molecule))
        groupings.append(grouping)
        log.info("%s: %d groups, sum sqrt(var) = %.10g, shots = %d", name, len(grouping),
                 plan.sum_sqrt_var, plan.total_shots)
    return reports, groupings, spectrum


def cmd_pipeline(args) -> int:
    ham, raw = load_hamiltonian(args.input, args.drop_threshold)
    reports, groupings, spectrum = run_pipeline(ham, args.schemes, args.epsilon, args.tcnot_us,
                                                args.threads, args.virtuals)
    best = min(range(len(reports)), key=lambda k: (reports[k].sum_sqrt_var, k))
    extra_rows = [{"n_groups": r.plan.n_groups, "best": int(k == best)}
                  for k, r in enumerate(reports)]
    seed = raw.get("generator", {}).get("seed")
    header = [f"epsilon={args.epsilon!r}", f"t_cnot_us={args.tcnot_us!r}",
              f"seed={seed}", f"ground_energy={_io.format_float(spectrum.ground_energy)}"]
    _emit(reports_to_csv(reports, extra=("n_groups", "best"), rows_extra=extra_rows,
                         header_comments=header), args.output)
    if args.groupings:
        outdir = Path(args.groupings)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, g in zip(args.schemes, groupings):
            g.save(outdir / f"grouping-{name}.json")
    return EXIT_OK


def cmd_report(args) -> int:
    reports = []
    for item in args.inputs:
        label, sep, path = item.partition("=")
        if not sep or not label or not path:
            raise ValidationError(f"expected LABEL=PATH, got {item!r}")
        if not Path(path).is_file():
            raise ValidationError(f"input file not found: {path}")
        ham, _ = load_hamiltonian(path, args.drop_threshold)
        per_scheme, _, _ = run_pipeline(ham, args.schemes, args.epsilon, args.tcnot_us,
                                        args.threads, args.virtuals, molecule=args.molecule)
        chosen = min(per_scheme, key=lambda r: r.sum_sqrt_var)
        reports.append(runtime(chosen.plan, chosen.n_modes, chosen.n_virtuals, args.tcnot_us,
                               label=label, molecule=args.molecule))
    summary = reduction_report(reports, exclude=args.exclude_label)
    header = [f"molecule={args.molecule}", f"epsilon={args.epsilon!r}",
              f"t_cnot_us={args.tcnot_us!r}", f"reduction={_io.format_float(summary.reduction)}"]
    kept = [r for r in reports if r.label not in set(args.exclude_label)]
    csv_text = reports_to_csv(kept, header_comments=header)
    if args.output:
        _io.atomic_write_text(args.output, csv_text)
        print(summary.table())
    else:
        sys.stdout.write(csv_text)
        sys.stderr.write(summary.table() + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _scheme_list(text: str) -> list[str]:
    names = [s.strip().lower() for s in text.split(",") if s.strip()]
    return list(SCHEME_NAMES) if names == ["all"] else names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vibrometer",
        description="Measurement cost of vibrational Hamiltonians on qubits.",
        epilog=SCHEMAS, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap (default: $VIBROMETER_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, epsilon=False, drop=False, runtime_flags=False):
        if drop:
            p.add_argument("--drop-threshold", type=float, default=0.0,
                           help="drop expanded strings with |coeff| <= this (default 0)")
        if epsilon:
            p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                           help=f"target precision in Hamiltonian units (default {DEFAULT_EPSILON})")
        if runtime_flags:
            p.add_argument("--tcnot-us", type=float, default=DEFAULT_TCNOT_US,
                           help="CNOT gate time in microseconds (default 1.0)")
            p.add_argument("--virtuals", type=int, default=None,
                           help="virtual modals per mode (default: max modals - 1)")

    p = sub.add_parser("synth", help="generate a synthetic SOP Hamiltonian")
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--modes", type=int, help="mode count (checked against --harmonic)")
    p.add_argument("--modals", default="4", help="modals per mode, one value or a list")
    p.add_argument("--harmonic", help="comma-separated harmonic frequencies")
    p.add_argument("--cubic", type=float, default=0.0, help="random cubic force-constant scale")
    p.add_argument("--quartic", type=float, default=0.0, help="random quartic force-constant scale")
    p.add_argument("--seed", type=int, default=None, help="seed for random force constants")
    p.add_argument("--rotate", help="rotation angle for --pair, e.g. 30deg")
    p.add_argument("--pair", help="mode pair i,j rotated by --rotate (default 0,1)")
    p.add_argument("--random-rotation", type=int, default=None, metavar="SEED",
                   help="apply a random orthogonal rotation drawn with this seed")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth, paths=lambda a: [a.config] if a.config else [])

    p = sub.add_parser("expand", help="SOP JSON -> expanded JSON")
    p.add_argument("input")
    common(p, drop=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_expand, paths=lambda a: [a.input])

    p = sub.add_parser("encode", help="SOP/expanded JSON -> Pauli text (+ layout JSON)")
    p.add_argument("input")
    common(p, drop=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--layout", help="write the qubit layout JSON here")
    p.set_defaults(func=cmd_encode, paths=lambda a: [a.input])

    p = sub.add_parser("group", help="Pauli text + layout -> grouping JSON")
    p.add_argument("pauli")
    p.add_argument("--layout", required=True)
    p.add_argument("--scheme", default="qwc", choices=list(SCHEME_NAMES))
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_group, paths=lambda a: [a.pauli, a.layout])

    p = sub.add_parser("variance", help="group variances in the FVCI ground state")
    p.add_argument("grouping")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--hamiltonian", help="SOP/expanded JSON; its FVCI ground state is used")
    src.add_argument("--state", help="state file (with .json sidecar)")
    p.add_argument("--save-state", help="write the FVCI ground state here")
    common(p, drop=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_variance,
                   paths=lambda a: [a.grouping] + [x for x in (a.hamiltonian, a.state) if x])

    p = sub.add_parser("plan", help="variances -> shot allocation and runtime CSV")
    p.add_argument("variances")
    p.add_argument("--modals", required=True, help="modals per mode, e.g. 4,4,4")
    p.add_argument("--label", help="row label (default: scheme)")
    p.add_argument("--shots", help="write per-group shots JSON here")
    common(p, epsilon=True, runtime_flags=True)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_plan, paths=lambda a: [a.variances])

    p = sub.add_parser("pipeline", help="run every stage for one Hamiltonian")
    p.add_argument("input")
    p.add_argument("--scheme", dest="schemes", type=_scheme_list, default=list(SCHEME_NAMES),
                   help="comma-separated subset of qwc,fc,qwc-mcr,fc-mcr (default all)")
    p.add_argument("--groupings", help="directory for per-scheme grouping JSON")
    common(p, epsilon=True, drop=True, runtime_flags=True)
    p.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_pipeline, paths=lambda a: [a.input])

    p = sub.add_parser("report", help="reduction across coordinate systems")
    p.add_argument("inputs", nargs="+", metavar="LABEL=PATH")
    p.add_argument("--molecule", default="", help="molecule tag shared by all inputs")
    p.add_argument("--scheme", dest="schemes", type=_scheme_list, default=list(SCHEME_NAMES),
                   help="schemes considered; the lowest-variance one is used per input")
    p.add_argument("--exclude-label", action="append", default=[],
                   help="leave this coordinate label out of the reduction (repeatable)")
    common(p, epsilon=True, drop=True, runtime_flags=True)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_report, paths=lambda a: [])
    return parser


def _config_from(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        inputs=args.paths(args),
        output=getattr(args, "output", None) if getattr(args, "output", None) != "-" else None,
        schemes=getattr(args, "schemes", list(SCHEME_NAMES)),
        epsilon=getattr(args, "epsilon", DEFAULT_EPSILON),
        t_cnot_us=getattr(args, "tcnot_us", DEFAULT_TCNOT_US),
        seed=getattr(args, "seed", None),
        drop_threshold=getattr(args, "drop_threshold", 0.0),
        exclude_labels=getattr(args, "exclude_label", []),
        threads=args.threads,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.threads = _threads(args.threads)
        _config_from(args).validate()
        return args.func(args)
    except ResourceLimitError as exc:
        log.error("resource limit: %s", exc)
        return EXIT_RESOURCE
    except InvariantViolation as exc:
        log.error("invariant violated: %s", exc)
        return EXIT_INVARIANT
    except ValidationError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_VALIDATION
    except (OSError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_VALIDATION
    except VibrometerError as exc:  # pragma: no cover - every subclass is handled above
        log.error("%s", exc)
        return EXIT_INVARIANT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
