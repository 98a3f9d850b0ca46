"""
Plain-text system definitions.

    # free particle with friction
    kind = hamiltonian
    n = 1
    expression = p1^2/2 + kappa*z
    param.kappa = 1
    exclude = q1^2 + p1^2          # points where |expr| < 1e-9 are skipped
    box = 0:2, -2:2, -2:2, -2:2
    initial = 0, 0, 1, 0
    t_span = 0:1
    quantity.p = dissipated: p1
    symmetry.translation = 0; 1; 0; 0

`key: value` is accepted as well as `key = value`. A definition loads into the
same ExampleEntry the built-in catalog produces, so every command treats both
alike.
"""

import logging
import os
import re
from typing import Mapping

import numpy as np

from catalog import REAL, ExampleEntry, ParamSpec, RegisteredQuantity, RegisteredSymmetry, resolve_params
from errors import ContactError, SystemFileError
from fields import ComponentField, ExprField
from hamiltonian import QUANTITY_KINDS, HamiltonianSystem
from lagrangian import LagrangianSystem
from phase_space import HAMILTONIAN, LAGRANGIAN, ChartSpec
from symmetry import default_box

log = logging.getLogger(__name__)

EXCLUDE_THRESHOLD = 1e-9
SINGLE_KEYS = ("kind", "n", "expression", "exclude", "box", "initial", "t_span", "name")
_LINE_RE = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*[=:]\s*(.*?)\s*$")


def parse_box(text: str, d: int) -> list[tuple[float, float]]:
    """`lo:hi,lo:hi,...` with one interval per chart coordinate."""
    intervals = []
    for part in text.split(","):
        lo, sep, hi = part.partition(":")
        if not sep:
            raise SystemFileError(f"box interval {part.strip()!r} is not lo:hi")
        try:
            intervals.append((float(lo), float(hi)))
        except ValueError as exc:
            raise SystemFileError(f"box interval {part.strip()!r} is not numeric") from exc
    if len(intervals) != d:
        raise SystemFileError(f"box has {len(intervals)} intervals, the chart has {d} coordinates")
    for lo, hi in intervals:
        if not lo <= hi:
            raise SystemFileError(f"box interval {lo}:{hi} is empty")
    return intervals


def _numbers(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in re.split(r"[,\s]+", text.strip()) if v]
    except ValueError as exc:
        raise SystemFileError(f"{what} must be a list of numbers, got {text!r}") from exc


def read_pairs(text: str) -> list[tuple[int, str, str]]:
    """(line number, key, value) for every non-blank line, comments stripped."""
    pairs = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        match = _LINE_RE.match(line)
        if not match:
            raise SystemFileError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
        pairs.append((number, match.group(1), match.group(2)))
    return pairs


def parse_system_text(text: str, name: str = "system", overrides: Mapping[str, object] | None = None) -> ExampleEntry:
    single: dict[str, str] = {}
    params: dict[str, str] = {}
    quantities: list[tuple[int, str, str]] = []
    symmetries: list[tuple[int, str, str]] = []
    for number, key, value in read_pairs(text):
        if key.startswith("param."):
            params[key[len("param."):]] = value
        elif key.startswith("quantity."):
            quantities.append((number, key[len("quantity."):], value))
        elif key.startswith("symmetry."):
            symmetries.append((number, key[len("symmetry."):], value))
        elif key in SINGLE_KEYS:
            if key in single:
                raise SystemFileError(f"line {number}: '{key}' given twice")
            single[key] = value
        else:
            raise SystemFileError(f"line {number}: unknown key '{key}'")

    for key in ("kind", "n", "expression"):
        if key not in single:
            raise SystemFileError(f"missing required key '{key}'")
    kind = single["kind"].lower()
    if kind not in (HAMILTONIAN, LAGRANGIAN):
        raise SystemFileError(f"kind must be {HAMILTONIAN} or {LAGRANGIAN}, got {single['kind']!r}")
    try:
        n = int(single["n"])
    except ValueError as exc:
        raise SystemFileError(f"n must be an integer, got {single['n']!r}") from exc
    if n < 1:
        raise SystemFileError(f"n must be at least 1, got {n}")
    chart = ChartSpec(n, kind)
    name = single.get("name", name)

    schema = {key: ParamSpec(value, REAL) for key, value in params.items()}
    values = resolve_params(schema, overrides or {})
    numeric = {key: float(value) for key, value in values.items()}

    energy = ExprField.parse(single["expression"], chart, numeric)
    exclude = None
    if "exclude" in single:
        predicate = ExprField.parse(single["exclude"], chart, numeric)

        def exclude(x: np.ndarray) -> bool:
            return abs(predicate(x)) < EXCLUDE_THRESHOLD

    if kind == HAMILTONIAN:
        system = HamiltonianSystem(chart, energy, numeric, name, exclude)
    else:
        system = LagrangianSystem(chart, energy, numeric, name, exclude)

    box = parse_box(single["box"], chart.d) if "box" in single else default_box(chart)
    if "initial" in single:
        initial = np.array(_numbers(single["initial"], "initial"))
        if initial.shape != (chart.d,):
            raise SystemFileError(f"initial has {initial.size} values, the chart has {chart.d} coordinates")
    else:
        initial = np.array([(lo + hi) / 2 for lo, hi in box])
    t_span = (0.0, 1.0)
    if "t_span" in single:
        t0, sep, t1 = single["t_span"].partition(":")
        try:
            t_span = (float(t0), float(t1))
        except ValueError as exc:
            raise SystemFileError(f"t_span must be t0:t1, got {single['t_span']!r}") from exc

    registered_q = []
    for number, qname, value in quantities:
        qkind, sep, source = value.partition(":")
        qkind = qkind.strip().lower()
        if not sep or qkind not in QUANTITY_KINDS:
            raise SystemFileError(f"line {number}: quantity must read '<{'|'.join(QUANTITY_KINDS)}>: <expr>'")
        registered_q.append(RegisteredQuantity(qname, qkind, ExprField.parse(source, chart, numeric)))

    registered_s = []
    for number, sname, value in symmetries:
        try:
            field = ComponentField.parse(value, chart, numeric, label=sname)
        except ContactError:
            raise
        except ValueError as exc:
            raise SystemFileError(f"line {number}: {exc}") from exc
        registered_s.append(RegisteredSymmetry(sname, field, {}))

    log.info("Loaded %s system '%s' with n=%d, %d quantities, %d symmetries",
             kind, name, n, len(registered_q), len(registered_s))
    return ExampleEntry(
        name=name,
        description=f"{kind} system from file",
        system=system,
        params=values,
        schema=schema,
        box=box,
        initial=initial,
        t_span=t_span,
        quantities=registered_q,
        symmetries=registered_s,
        observables={"E": energy},
    )


def load_system_file(path: str, overrides: Mapping[str, object] | None = None) -> ExampleEntry:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise SystemFileError(f"cannot read system file '{path}': {exc}") from exc
    name = os.path.splitext(os.path.basename(path))[0]
    try:
        return parse_system_text(text, name, overrides)
    except SystemFileError as exc:
        raise SystemFileError(f"{path}: {exc}") from exc
