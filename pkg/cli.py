#!/usr/bin/env python3
"""
Cocontact mechanics command line.

    python cli.py simulate --system free_particle_tdm --t0 0 --t1 1 --dt 1e-3 --observe p1 --out run.csv
    python cli.py verify quantity --system r4_linear --expr p1 --kind dissipated --samples 100 --seed 7
    python cli.py classify field --system r4_linear --components "0;0;1;0"
    python cli.py classify map --system r4_linear --map "t;q1;p1+1;z" --kind generalized
    python cli.py list-examples

Exit codes: 0 success, 2 usage error, 3 verification failure, 4 runtime error.
Diagnostics go to standard error; reports go to --out or standard output.
"""

import argparse
import logging
import os
import sys

import numpy as np

import config
from catalog import COMPANION, EXAMPLE_NAMES, PRIMARY, ExampleEntry, build_example, list_examples
from errors import (ContactError, DependenceError, ExprSyntaxError, ParamSchemaError, SystemFileError,
                    UnboundParam, UnknownExample, UnknownIdentifier)
from expr import Const, parse
from fields import AD2, FD, ComponentField, ExprField
from hamiltonian import QUANTITY_KINDS, Tolerance
from integrate import ADAPTIVE45, RK4, IntegratorConfig, integrate, monitor, verify_dissipation_along
from lagrangian import ACTION_SYMMETRY, LiftSpec, check_action_symmetry, check_extended_natural
from report import render_csv, render_json, write_json, write_trajectory
from symmetry import (DIFFEO_KINDS, BoxSampler, CartanWitness, DiffeoSpec, check_cartan, check_diffeomorphism,
                      check_quantity, classify_infinitesimal)
from system_file import load_system_file, parse_box

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERIFICATION = 3
EXIT_RUNTIME = 4

USAGE_ERRORS = (ExprSyntaxError, UnknownIdentifier, UnboundParam, UnknownExample, ParamSchemaError,
                SystemFileError, DependenceError)

# Options whose values are expressions or number lists and may start with "-".
VALUE_OPTIONS = frozenset({"--expr", "--observe", "--components", "--lift", "--zeta", "--cartan-rho", "--cartan-g",
                           "--map", "--initial", "--box"})


class UsageError(ContactError, ValueError):
    """Bad combination of command-line options."""


# ---------------------------------------------------------------------------
# Resolving systems and fields
# ---------------------------------------------------------------------------

def parse_set(pairs: list[str] | None) -> dict[str, str]:
    out = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--set expects k=v, got {pair!r}")
        out[key.strip()] = value.strip()
    return out


def resolve_entry(system: str, pairs: list[str] | None = None) -> ExampleEntry:
    """A built-in name or the path of a system file."""
    overrides = parse_set(pairs)
    if system in EXAMPLE_NAMES:
        return build_example(system, overrides)
    if os.path.exists(system):
        return load_system_file(system, overrides)
    raise UnknownExample(system, EXAMPLE_NAMES)


def _side(entry: ExampleEntry, side: str):
    if side == COMPANION and entry.companion is None:
        raise UsageError(f"{entry.name} has no companion system")
    return entry.system_for(side)


def _sampler(args, entry: ExampleEntry, side: str) -> BoxSampler:
    sys_ = entry.system_for(side)
    box = parse_box(args.box, sys_.chart.d) if args.box else entry.box_for(side)
    return BoxSampler(box, args.samples, args.seed, sys_.exclude)


def _tolerance(args, default: Tolerance | None = None) -> Tolerance:
    if args.tol is not None:
        return Tolerance(args.tol, args.tol)
    return default or Tolerance()


def force_zero_time_component(source: str) -> str:
    """Replace the first component of `a;b;...` by 0 unless it already parses to 0."""
    parts = source.split(";")
    first = parts[0].strip()
    try:
        expr = parse(first, ())
    except ContactError:
        expr = None
    if not (isinstance(expr, Const) and expr.value == 0.0):
        log.warning("Forcing the t-component %r of the field to 0 (symmetries must satisfy tau(Y) = 0)", first)
        parts[0] = "0"
    return ";".join(parts)


def _emit(args, payload: dict) -> None:
    if getattr(args, "out", None):
        write_json(args.out, payload)
    else:
        sys.stdout.write(render_json(payload))


def _integrator(args) -> IntegratorConfig:
    if args.dt is not None and (args.rtol is not None or args.atol is not None):
        raise UsageError("give either --dt or --rtol/--atol, not both")
    if args.rtol is not None or args.atol is not None:
        return IntegratorConfig(ADAPTIVE45, rtol=args.rtol or config.ADAPTIVE_RTOL,
                                atol=args.atol or config.ADAPTIVE_ATOL, stride=args.stride)
    return IntegratorConfig(RK4, step=args.dt or config.RK4_STEP, stride=args.stride)


def _initial(args, entry: ExampleEntry, side: str) -> np.ndarray:
    if args.initial:
        values = np.array([float(v) for v in args.initial.split(",")])
        d = entry.system_for(side).chart.d
        if values.shape != (d,):
            raise UsageError(f"--initial needs {d} comma-separated values, got {values.size}")
        return values
    return entry.initial_for(side)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_list_examples(args) -> int:
    for line in list_examples():
        print(line)
    return EXIT_OK


def cmd_simulate(args) -> int:
    entry = resolve_entry(args.system, args.set)
    system = _side(entry, args.side)
    t0 = entry.t_span[0] if args.t0 is None else args.t0
    t1 = entry.t_span[1] if args.t1 is None else args.t1
    traj = integrate(system, _initial(args, entry, args.side), (t0, t1), _integrator(args))

    observables = {}
    for source in args.observe or []:
        if source in entry.observables:
            observables[source] = entry.observables[source]
        else:
            observables[source] = ExprField.parse(source, system.chart, system.params)
    values = monitor(traj, observables)
    if args.out:
        write_trajectory(args.out, traj, values)
    else:
        sys.stdout.write(render_csv(traj, values))
    return EXIT_OK


def cmd_verify_quantity(args) -> int:
    entry = resolve_entry(args.system, args.set)
    system = _side(entry, args.side)
    default_tol = None
    along_tol = args.along_tol
    if args.quantity:
        registered = next((q for q in entry.quantities if q.name == args.quantity and q.system == args.side), None)
        if registered is None:
            raise UsageError(f"{entry.name} has no quantity '{args.quantity}' on its {args.side} system")
        f, kind, label = registered.field, args.kind or registered.kind, registered.name
        default_tol = registered.tolerance
        along_tol = along_tol or registered.along_tolerance
    elif args.expr:
        f, kind, label = ExprField.parse(args.expr, system.chart, system.params), args.kind, args.expr
    else:
        raise UsageError("give --expr or --quantity")
    kind = kind or QUANTITY_KINDS[0]

    report = check_quantity(f, system, _sampler(args, entry, args.side), kind, _tolerance(args, default_tol), label)
    payload = {"kind": "quantity_report", "pointwise": report.to_dict()}
    verdicts = {kind: report.verdict(kind)}
    if args.along:
        traj = integrate(system, _initial(args, entry, args.side), entry.t_span, _integrator(args))
        along = verify_dissipation_along(traj, f, system, kind, along_tol or 1e-6, label)
        payload["along"] = {**along.to_dict(), "trajectory": traj.metadata}
        verdicts["along"] = "pass" if along.passed else "fail"
    expected = _parse_expect(args.expect)
    if expected:
        payload["expected"] = expected
        passed = not _expectation_failures(verdicts, expected)
    else:
        passed = all(v == "pass" for v in verdicts.values())
    payload["verdict"] = "pass" if passed else "fail"
    _emit(args, payload)
    return EXIT_OK if passed else EXIT_VERIFICATION


def _expectation_failures(verdicts: dict[str, str], expected: dict[str, str]) -> dict[str, str]:
    return {name: verdicts.get(name, "missing") for name, want in expected.items() if verdicts.get(name) != want}


def _parse_expect(pairs: list[str] | None) -> dict[str, str]:
    return parse_set(pairs)


def cmd_classify_field(args) -> int:
    entry = resolve_entry(args.system, args.set)
    system = _side(entry, args.side)
    chart = system.chart
    expected = _parse_expect(args.expect)
    witness = None
    params = system.params

    if args.symmetry:
        registered = next((s for s in entry.symmetries if s.name == args.symmetry and s.system == args.side), None)
        if registered is None or isinstance(registered.target, DiffeoSpec):
            raise UsageError(f"{entry.name} has no registered field '{args.symmetry}' on its {args.side} system")
        target = registered.target
        witness = registered.witness
        expected = expected or dict(registered.expected)
    elif args.lift:
        base = [ExprField.parse(part.strip(), chart, params) for part in args.lift.split(";")]
        zeta = ExprField.parse(args.zeta, chart, params) if args.zeta else None
        target = LiftSpec(tuple(base), zeta, label=args.lift)
    elif args.components:
        target = ComponentField.parse(force_zero_time_component(args.components), chart, params,
                                      FD if args.fd else AD2, label=args.components)
    else:
        raise UsageError("give --components, --lift or --symmetry")

    if args.cartan_rho or args.cartan_g:
        witness = CartanWitness(ExprField.parse(args.cartan_rho or "0", chart, params),
                                ExprField.parse(args.cartan_g or "0", chart, params))

    sampler = _sampler(args, entry, args.side)
    tol = _tolerance(args)
    reports = []
    if ACTION_SYMMETRY in expected and not isinstance(target, (LiftSpec, ComponentField)):
        reports.append(check_action_symmetry(system, sampler, tol, zeta_full=target))
    elif isinstance(target, LiftSpec):
        result = check_extended_natural(target, system, sampler, tol, check_conformal=args.conformal)
        reports.append(result.report)
        if result.conformal_report is not None:
            reports.append(result.conformal_report)
    else:
        reports.append(classify_infinitesimal(target, system, sampler, tol))
        if witness is not None:
            reports.append(check_cartan(target, witness, system, sampler, tol).report)

    verdicts = {name: v.verdict for r in reports for name, v in r.verdicts.items()}
    failures = _expectation_failures(verdicts, expected)
    payload = {"kind": "symmetry_report", "reports": [r.to_dict() for r in reports]}
    if expected:
        payload["expected"] = expected
        payload["verdict"] = "fail" if failures else "pass"
    _emit(args, payload)
    if failures:
        log.error("Verdicts differ from expectations: %s", failures)
        return EXIT_VERIFICATION
    return EXIT_OK


def cmd_classify_map(args) -> int:
    entry = resolve_entry(args.system, args.set)
    system = _side(entry, args.side)
    chart = system.chart
    expected = _parse_expect(args.expect)
    kinds = list(args.kind or [])

    if args.symmetry:
        registered = next((s for s in entry.symmetries if s.name == args.symmetry and s.system == args.side), None)
        if registered is None or not isinstance(registered.target, DiffeoSpec):
            raise UsageError(f"{entry.name} has no registered map '{args.symmetry}' on its {args.side} system")
        phi = registered.target
        expected = expected or dict(registered.expected)
        kinds = kinds or list(registered.expected)
    elif args.map:
        parts = [part.strip() for part in args.map.split(";")]
        if len(parts) != chart.d:
            raise UsageError(f"--map needs {chart.d} components ({', '.join(chart.names)}), got {len(parts)}")
        phi = DiffeoSpec.from_components([ExprField.parse(p, chart, system.params) for p in parts], label=args.map)
    else:
        raise UsageError("give --map or --symmetry")
    if not kinds:
        raise UsageError(f"give --kind ({', '.join(DIFFEO_KINDS)})")

    sampler = _sampler(args, entry, args.side)
    tol = _tolerance(args)
    reports = [check_diffeomorphism(phi, system, sampler, kind, tol) for kind in kinds]
    verdicts = {name: v.verdict for r in reports for name, v in r.verdicts.items()}
    failures = _expectation_failures(verdicts, expected)
    payload = {"kind": "map_report", "reports": [r.to_dict() for r in reports]}
    if expected:
        payload["expected"] = expected
        payload["verdict"] = "fail" if failures else "pass"
    _emit(args, payload)
    if failures:
        log.error("Verdicts differ from expectations: %s", failures)
        return EXIT_VERIFICATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _system_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--system", required=True, help="built-in example name or system file path")
    parser.add_argument("--set", action="append", metavar="K=V", help="bind a parameter (repeatable)")
    parser.add_argument("--side", choices=(PRIMARY, COMPANION), default=PRIMARY,
                        help="use the example's companion system (e.g. its Lagrangian form)")


def _sampling_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--samples", type=int, default=config.SAMPLE_COUNT)
    parser.add_argument("--seed", type=int, default=config.SAMPLE_SEED)
    parser.add_argument("--box", help="lo:hi,... one interval per chart coordinate")
    parser.add_argument("--tol", type=float, help="absolute and relative residual tolerance")
    parser.add_argument("--expect", action="append", metavar="CLASS=VERDICT",
                        help="exit 3 unless CLASS gets VERDICT (repeatable)")
    parser.add_argument("--out", help="write the JSON report here instead of standard output")


def _integration_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dt", type=float, help="fixed RK4 step")
    parser.add_argument("--rtol", type=float, help="adaptive relative tolerance")
    parser.add_argument("--atol", type=float, help="adaptive absolute tolerance")
    parser.add_argument("--stride", type=int, default=1, help="keep every k-th step")
    parser.add_argument("--initial", help="comma-separated initial point in chart order")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Cocontact mechanics: simulate, verify quantities, classify symmetries")
    parser.add_argument("--log-level", default=config.LOG_LEVEL,
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"), type=str.upper)
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="integrate a system and write its trajectory")
    _system_options(simulate)
    simulate.add_argument("--t0", type=float)
    simulate.add_argument("--t1", type=float)
    _integration_options(simulate)
    simulate.add_argument("--observe", action="append", metavar="EXPR",
                          help="extra CSV column: an expression or a registered observable")
    simulate.add_argument("--out", help="path.csv or path.json; CSV to standard output when omitted")
    simulate.set_defaults(handler=cmd_simulate)

    verify = commands.add_parser("verify", help="verify a dissipated or conserved quantity")
    verify_kinds = verify.add_subparsers(dest="what", required=True)
    quantity = verify_kinds.add_parser("quantity")
    _system_options(quantity)
    quantity.add_argument("--expr", help="quantity expression")
    quantity.add_argument("--quantity", help="registered quantity name")
    quantity.add_argument("--kind", choices=QUANTITY_KINDS)
    quantity.add_argument("--along", action="store_true",
                          help="also integrate the default trajectory and check the decay law")
    quantity.add_argument("--along-tol", type=float)
    _sampling_options(quantity)
    _integration_options(quantity)
    quantity.set_defaults(handler=cmd_verify_quantity)

    classify = commands.add_parser("classify", help="classify a field or a map")
    classify_kinds = classify.add_subparsers(dest="what", required=True)
    field = classify_kinds.add_parser("field")
    _system_options(field)
    field.add_argument("--components", help="semicolon-separated components in chart order")
    field.add_argument("--lift", help="semicolon-separated base field Y^i(q) for the natural-symmetry test")
    field.add_argument("--zeta", help="zeta(z) for --lift")
    field.add_argument("--conformal", action="store_true", help="with --lift, also classify the complete lift")
    field.add_argument("--symmetry", help="registered field name")
    field.add_argument("--fd", action="store_true", help="differentiate the field by finite differences")
    field.add_argument("--cartan-rho", help="Cartan witness rho")
    field.add_argument("--cartan-g", help="Cartan witness g")
    _sampling_options(field)
    field.set_defaults(handler=cmd_classify_field)

    map_ = classify_kinds.add_parser("map")
    _system_options(map_)
    map_.add_argument("--map", help="semicolon-separated components of Phi in chart order")
    map_.add_argument("--symmetry", help="registered map name")
    map_.add_argument("--kind", action="append", choices=DIFFEO_KINDS)
    _sampling_options(map_)
    map_.set_defaults(handler=cmd_classify_map)

    listing = commands.add_parser("list-examples", help="list built-in examples")
    listing.set_defaults(handler=cmd_list_examples)
    return parser


def attach_option_values(argv: list[str]) -> list[str]:
    """Rewrite `--lift -q2;q1` as `--lift=-q2;q1` so argparse does not read the value as a flag."""
    out = []
    tokens = iter(argv)
    for token in tokens:
        if token in VALUE_OPTIONS:
            value = next(tokens, None)
            if value is None:
                out.append(token)
            elif value.startswith("-") and not value.startswith("--"):
                out.append(f"{token}={value}")
            else:
                out.extend((token, value))
        else:
            out.append(token)
    return out


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = attach_option_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        level=args.log_level,
        format="%(asctime)s [%(levelname)s] %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except USAGE_ERRORS + (UsageError,) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except ContactError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except Exception:
        log.exception("Unexpected failure")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
