"""
Built-in systems with their known quantities and symmetries.

Each entry bundles a system, the quantities and symmetries registered for it
together with the verdicts they must reproduce, a sampling box with an
exclusion predicate, and a default trajectory for along-flow checks.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

import config
from ad_core import Jet
from errors import ContactError, ParamSchemaError, UnknownExample
from expr import Expr, evaluate, evaluate_env, free_variables, parse, substitute
from fields import ComponentField, ConstantField, ExprField, JetField, ScalarField
from hamiltonian import CONSERVED, DISSIPATED, HamiltonianSystem, Tolerance
from lagrangian import (ACTION_SYMMETRY, EXTENDED_NATURAL, LagrangianSystem, LiftSpec, check_action_symmetry,
                        check_extended_natural)
from phase_space import HAMILTONIAN, LAGRANGIAN, ChartSpec
from symmetry import (CARTAN, CONFORMAL_COCONTACTOMORPHISM, CONFORMAL_HAMILTONIAN, DYNAMICAL, FAIL, GENERALIZED, PASS,
                      REEB_PRESERVING, STRICT_HAMILTONIAN, BoxSampler, BracketField, CartanWitness, DiffeoSpec,
                      check_cartan, check_diffeomorphism, classify_infinitesimal)

log = logging.getLogger(__name__)

PRIMARY = "primary"
COMPANION = "companion"

POSITIVE = "positive"
NONNEGATIVE = "nonnegative"
REAL = "real"
EXPR_T = "expression in t"
EXPR_R = "expression in r"
EXPR_V = "expression in t, r2, z"
OPTIONAL_EXPR_T = "optional expression in t"


@dataclass(frozen=True)
class ParamSpec:
    default: str
    kind: str
    help: str = ""


@dataclass
class RegisteredQuantity:
    name: str
    kind: str
    field: ScalarField
    tolerance: Tolerance = field(default_factory=Tolerance)
    along_tolerance: float = 1e-6
    system: str = PRIMARY


@dataclass
class RegisteredSymmetry:
    """A field, lift, bracket or map with the verdict each tested class must give."""

    name: str
    target: object
    expected: dict[str, str]
    witness: CartanWitness | None = None
    system: str = PRIMARY


@dataclass
class ExampleEntry:
    name: str
    description: str
    system: HamiltonianSystem | LagrangianSystem
    params: dict[str, str]
    schema: dict[str, ParamSpec]
    box: list[tuple[float, float]]
    initial: np.ndarray
    t_span: tuple[float, float]
    quantities: list[RegisteredQuantity] = field(default_factory=list)
    symmetries: list[RegisteredSymmetry] = field(default_factory=list)
    observables: dict[str, ScalarField] = field(default_factory=dict)
    companion: HamiltonianSystem | LagrangianSystem | None = None
    companion_box: list[tuple[float, float]] | None = None
    companion_initial: np.ndarray | None = None

    @property
    def dof(self) -> int:
        return self.system.chart.n

    @property
    def exclude(self) -> Callable[[np.ndarray], bool] | None:
        return self.system.exclude

    def system_for(self, which: str):
        return self.companion if which == COMPANION else self.system

    def box_for(self, which: str):
        return self.companion_box if which == COMPANION else self.box

    def initial_for(self, which: str):
        return self.companion_initial if which == COMPANION else self.initial

    def quantity(self, name: str) -> RegisteredQuantity:
        for q in self.quantities:
            if q.name == name:
                return q
        raise KeyError(name)

    def symmetry(self, name: str) -> RegisteredSymmetry:
        for s in self.symmetries:
            if s.name == name:
                return s
        raise KeyError(name)

    def summary(self) -> str:
        quantities = ",".join(f"{q.name}:{q.kind}" for q in self.quantities) or "-"
        symmetries = ",".join(s.name for s in self.symmetries) or "-"
        return (f"{self.name}\tdof={self.dof}\t{self.system.kind}\t"
                f"quantities={quantities}\tsymmetries={symmetries}")


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

def resolve_params(schema: Mapping[str, ParamSpec], overrides: Mapping[str, object]) -> dict[str, str]:
    unknown = set(overrides) - set(schema)
    if unknown:
        raise ParamSchemaError(f"Unknown parameter(s) {', '.join(sorted(unknown))}; "
                               f"expected {', '.join(schema) or 'none'}")
    values = {name: str(overrides.get(name, spec.default)).strip() for name, spec in schema.items()}
    for name, spec in schema.items():
        if spec.kind not in (POSITIVE, NONNEGATIVE, REAL):
            continue
        try:
            number = float(values[name])
        except ValueError as exc:
            raise ParamSchemaError(f"Parameter '{name}' must be a number, got {values[name]!r}") from exc
        if not np.isfinite(number):
            raise ParamSchemaError(f"Parameter '{name}' must be finite")
        if spec.kind == POSITIVE and number <= 0:
            raise ParamSchemaError(f"Parameter '{name}' must be > 0, got {number}")
        if spec.kind == NONNEGATIVE and number < 0:
            raise ParamSchemaError(f"Parameter '{name}' must be >= 0, got {number}")
    return values


def _numeric(schema: Mapping[str, ParamSpec], values: Mapping[str, str]) -> dict[str, float]:
    return {name: float(values[name]) for name, spec in schema.items() if spec.kind in (POSITIVE, NONNEGATIVE, REAL)}


def _param_expr(name: str, text: str, vocabulary, numeric: Mapping[str, float]) -> Expr:
    try:
        return parse(text, vocabulary, numeric.keys())
    except ContactError as exc:
        raise ParamSchemaError(f"Parameter '{name}': {exc}") from exc


def _require_positive_in_t(name: str, expr: Expr, numeric: Mapping[str, float], t_range: tuple[float, float]) -> None:
    for t in np.linspace(t_range[0], t_range[1], 11):
        if not evaluate(expr, {"t": t}, numeric) > 0:
            raise ParamSchemaError(f"Parameter '{name}' must stay positive; it is not at t={t:g}")


def _build(text: str, chart: ChartSpec, numeric: Mapping[str, float], subs: Mapping[str, Expr] | None = None) -> ExprField:
    """Parse a template whose placeholders (in `subs`) are spliced in as subtrees."""
    subs = dict(subs or {})
    expr = parse(text, chart, set(numeric) | set(subs))
    return ExprField(substitute(expr, subs), chart, numeric)


def _components(texts: list[str], chart: ChartSpec, numeric, subs=None, label="Y") -> ComponentField:
    return ComponentField([_build(t, chart, numeric, subs) for t in texts], label=label)


def _box(chart: ChartSpec, t_range=(0.0, 2.0), half_width=config.DEFAULT_BOX_HALF_WIDTH):
    return [t_range] + [(-half_width, half_width)] * (chart.d - 1)


# ---------------------------------------------------------------------------
# Free particle with time-dependent mass
# ---------------------------------------------------------------------------

class QuadratureDecay:
    """exp(-kappa * int_0^t ds / m(s)) by Gauss-Legendre quadrature; depends on t only.

    Derivatives in t are exact: f' = -kappa f / m and f'' = f (kappa^2 + kappa m') / m^2.
    """

    def __init__(self, m_expr: Expr, kappa: float, dim: int, nodes: int = config.QUADRATURE_NODES):
        self.m_expr = m_expr
        self.kappa = kappa
        self.dim = dim
        self.nodes, self.weights = np.polynomial.legendre.leggauss(nodes)

    def integral(self, t: float) -> float:
        s = 0.5 * t * (self.nodes + 1.0)
        m = np.array([evaluate(self.m_expr, {"t": si}, {}) for si in s])
        return 0.5 * t * float(self.weights @ (1.0 / m))

    def jet(self, x, order: int) -> Jet:
        t = float(x[0])
        value = float(np.exp(-self.kappa * self.integral(t)))
        grad = np.zeros(self.dim)
        if order == 0:
            return Jet(value, grad, None, 0)
        t_jet = Jet(t, np.array([1.0]), np.zeros((1, 1)), 2)
        m = evaluate_env(self.m_expr, {"t": t_jet}, {}, 1)
        grad[0] = -self.kappa * value / m.value
        hess = None
        if order >= 2:
            hess = np.zeros((self.dim, self.dim))
            hess[0, 0] = value * (self.kappa ** 2 + self.kappa * m.grad[0]) / m.value ** 2
        return Jet(value, grad, hess, order)

    def __call__(self, x) -> float:
        return self.jet(x, 0).value


FREE_PARTICLE_SCHEMA = {
    "m": ParamSpec("1", EXPR_T, "mass m(t)"),
    "kappa": ParamSpec("1", NONNEGATIVE, "friction coefficient"),
    "kappa_integral": ParamSpec("", OPTIONAL_EXPR_T, "closed form of int_0^t kappa/m(s) ds, if known"),
}


def _free_particle(values: dict[str, str]) -> ExampleEntry:
    numeric = _numeric(FREE_PARTICLE_SCHEMA, values)
    kappa = numeric["kappa"]
    H1 = ChartSpec(1, HAMILTONIAN)
    L1 = ChartSpec(1, LAGRANGIAN)
    t_range = (0.0, 2.0)
    m = _param_expr("m", values["m"], ("t",), {})
    _require_positive_in_t("m", m, {}, t_range)
    subs = {"m": m}

    H = _build("p1^2/(2*m) + kappa*z/m", H1, numeric, subs)
    hsys = HamiltonianSystem(H1, H, numeric, "free_particle_tdm")
    L = _build("m*v1^2/2 - kappa*z/m", L1, numeric, subs)
    lsys = LagrangianSystem(L1, L, numeric, "free_particle_tdm-lagrangian")

    decay_tol = Tolerance()
    if not free_variables(m):
        decay_h = _build("exp(-kappa*t/m)", H1, numeric, subs)
        decay_l = _build("exp(-kappa*t/m)", L1, numeric, subs)
    elif values["kappa_integral"]:
        integral = _param_expr("kappa_integral", values["kappa_integral"], ("t",), {})
        decay_h = _build("exp(-I)", H1, numeric, {"I": integral})
        decay_l = _build("exp(-I)", L1, numeric, {"I": integral})
    else:
        log.info("m(t) is not constant and no kappa_integral was given; using quadrature")
        decay_h = QuadratureDecay(m, kappa, H1.d)
        decay_l = QuadratureDecay(m, kappa, L1.d)
        decay_tol = Tolerance(config.QUADRATURE_TOL, config.QUADRATURE_TOL)

    zero = ConstantField(0.0, H1.d)
    Y_f = ComponentField([zero, zero, zero, JetField(lambda x, order: -decay_h.jet(x, order), "-f")], label="Y_f")
    Y_f2 = _components(["0", "1", "0", "0"], H1, numeric, label="Y_f2")
    minus_f = JetField(lambda x, order: -decay_h.jet(x, order), "-f")

    return ExampleEntry(
        name="free_particle_tdm",
        description="free particle with time-dependent mass m(t) and linear friction in z",
        system=hsys,
        params=values,
        schema=FREE_PARTICLE_SCHEMA,
        box=_box(H1, t_range),
        initial=np.array([0.0, 0.0, 1.0, 0.0]),
        t_span=(0.0, 1.0),
        quantities=[
            RegisteredQuantity("f", DISSIPATED, decay_h, decay_tol),
            RegisteredQuantity("p", DISSIPATED, _build("p1", H1, numeric)),
            RegisteredQuantity("f", DISSIPATED, decay_l, decay_tol, system=COMPANION),
            RegisteredQuantity("momentum", DISSIPATED, _build("m*v1", L1, numeric, subs), system=COMPANION),
        ],
        symmetries=[
            RegisteredSymmetry("Y_f", Y_f, {GENERALIZED: PASS, DYNAMICAL: PASS, CONFORMAL_HAMILTONIAN: FAIL,
                                            STRICT_HAMILTONIAN: FAIL, CARTAN: PASS},
                               witness=CartanWitness(ConstantField(0.0, H1.d), minus_f)),
            RegisteredSymmetry("Y_f2", Y_f2, {GENERALIZED: PASS, DYNAMICAL: PASS, CONFORMAL_COCONTACTOMORPHISM: PASS,
                                              CONFORMAL_HAMILTONIAN: PASS, STRICT_HAMILTONIAN: PASS,
                                              REEB_PRESERVING: PASS}),
            RegisteredSymmetry("translation", LiftSpec((_build("1", L1, numeric),), label="d/dq"),
                               {EXTENDED_NATURAL: PASS}, system=COMPANION),
            RegisteredSymmetry("action", decay_l, {ACTION_SYMMETRY: PASS}, system=COMPANION),
        ],
        observables={"H": H},
        companion=lsys,
        companion_box=_box(L1, t_range),
        companion_initial=np.array([0.0, 0.0, 1.0, 0.0]),
    )


# ---------------------------------------------------------------------------
# Action-dependent central potential with time-dependent mass
# ---------------------------------------------------------------------------

CENTRAL_SCHEMA = {
    "m": ParamSpec("1", EXPR_T, "mass m(t)"),
    "V": ParamSpec("0.5*k*r2 + kappa*z", EXPR_V, "potential V(t, r2, z) with r2 = x^2 + y^2"),
    "k": ParamSpec("1", REAL, "spring constant used by the default V"),
    "kappa": ParamSpec("0.1", REAL, "action coupling used by the default V"),
}


def _central_potential(values: dict[str, str]) -> ExampleEntry:
    numeric = _numeric(CENTRAL_SCHEMA, values)
    L2 = ChartSpec(2, LAGRANGIAN)
    t_range = (0.0, 2.0)
    m = _param_expr("m", values["m"], ("t",), numeric)
    _require_positive_in_t("m", m, numeric, t_range)
    V = _param_expr("V", values["V"], ("t", "r2", "z"), numeric)
    V = substitute(V, {"r2": parse("q1^2 + q2^2", L2)})
    subs = {"m": m, "V": V}

    L = _build("m/2*(v1^2 + v2^2) - V", L2, numeric, subs)
    sys = LagrangianSystem(L2, L, numeric, "central_potential_tdm")
    rotation = LiftSpec((_build("-q2", L2, numeric), _build("q1", L2, numeric)), label="rotation")

    return ExampleEntry(
        name="central_potential_tdm",
        description="action-dependent central potential V(t, x^2+y^2, z) with time-dependent mass",
        system=sys,
        params=values,
        schema=CENTRAL_SCHEMA,
        box=_box(L2, t_range),
        initial=np.array([0.0, 1.0, 0.0, 0.0, 0.8, 0.0]),
        t_span=(0.0, 5.0),
        quantities=[RegisteredQuantity("angular_momentum", DISSIPATED,
                                       _build("m*(q1*v2 - q2*v1)", L2, numeric, subs))],
        symmetries=[RegisteredSymmetry("rotation", rotation, {EXTENDED_NATURAL: PASS})],
        observables={"angular_momentum": _build("m*(q1*v2 - q2*v1)", L2, numeric, subs),
                     "E_L": _build("m/2*(v1^2 + v2^2) + V", L2, numeric, subs)},
    )


# ---------------------------------------------------------------------------
# Two-body problem with time-dependent friction
# ---------------------------------------------------------------------------

TWO_BODY_SCHEMA = {
    "m1": ParamSpec("1", POSITIVE, "mass of body 1"),
    "m2": ParamSpec("1", POSITIVE, "mass of body 2"),
    "G": ParamSpec("1", REAL, "coupling used by the default U"),
    "gamma": ParamSpec("0.1", EXPR_T, "friction rate gamma(t)"),
    "U": ParamSpec("-G*m1*m2/r", EXPR_R, "central potential U(r)"),
}

_MU = "(m1*m2/(m1 + m2))"
_R = ("(q4 - q1)", "(q5 - q2)", "(q6 - q3)")
_RDOT = ("(v4 - v1)", "(v5 - v2)", "(v6 - v3)")


def _cross_axis(axis: int) -> tuple[str, str, str]:
    """Components of e_axis x r."""
    rx, ry, rz = _R
    return (("0", f"-{rz}", ry), (rz, "0", f"-{rx}"), (f"-{ry}", rx, "0"))[axis]


def _two_body(values: dict[str, str]) -> ExampleEntry:
    numeric = _numeric(TWO_BODY_SCHEMA, values)
    L6 = ChartSpec(6, LAGRANGIAN)
    gamma = _param_expr("gamma", values["gamma"], ("t",), numeric)
    U = _param_expr("U", values["U"], ("r",), numeric)
    U = substitute(U, {"r": parse(f"sqrt({_R[0]}^2 + {_R[1]}^2 + {_R[2]}^2)", L6)})
    subs = {"gamma": gamma, "U": U}
    kinetic = "m1/2*(v1^2 + v2^2 + v3^2) + m2/2*(v4^2 + v5^2 + v6^2)"

    L = _build(f"{kinetic} - U - gamma*z", L6, numeric, subs)

    def too_close(x: np.ndarray) -> bool:
        return float(np.linalg.norm(x[4:7] - x[1:4])) < 0.1

    sys = LagrangianSystem(L6, L, numeric, "two_body_friction", exclude=too_close)

    quantities = []
    symmetries = []
    axes = "xyz"
    for a in range(3):
        rdot = _build(f"(m1*v{a + 1} + m2*v{a + 4})/(m1 + m2)", L6, numeric)
        quantities.append(RegisteredQuantity(f"Rdot_{axes[a]}", DISSIPATED, rdot))
        base = ["0"] * 6
        base[a] = base[a + 3] = "1/(m1 + m2)"
        symmetries.append(RegisteredSymmetry(
            f"Y_Rdot_{axes[a]}", LiftSpec(tuple(_build(b, L6, numeric) for b in base), label=f"Y_Rdot_{axes[a]}"),
            {EXTENDED_NATURAL: PASS}))

    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        ang = _build(f"{_MU}*({_R[b]}*{_RDOT[c]} - {_R[c]}*{_RDOT[b]})", L6, numeric)
        quantities.append(RegisteredQuantity(f"L_{axes[a]}", DISSIPATED, ang))
        cross = _cross_axis(a)
        base = [f"-{_MU}/m1*({cross[k]})" for k in range(3)] + [f"{_MU}/m2*({cross[k]})" for k in range(3)]
        symmetries.append(RegisteredSymmetry(
            f"Y_L_{axes[a]}", LiftSpec(tuple(_build(e, L6, numeric) for e in base), label=f"Y_L_{axes[a]}"),
            {EXTENDED_NATURAL: PASS}))

    box = [(0.0, 2.0)] + [(-2.0, 2.0)] * 6 + [(-1.0, 1.0)] * 6 + [(-1.0, 1.0)]
    return ExampleEntry(
        name="two_body_friction",
        description="two-body problem with central potential U(r) and friction gamma(t)",
        system=sys,
        params=values,
        schema=TWO_BODY_SCHEMA,
        box=box,
        initial=np.array([0.0, -0.5, 0.0, 0.0, 0.5, 0.0, 0.0,
                          0.05, -0.57, 0.02, 0.05, 0.63, 0.02, 0.0]),
        t_span=(0.0, 10.0),
        quantities=quantities,
        symmetries=symmetries,
        observables={
            "E_mec": _build(f"{kinetic} + U", L6, numeric, subs),
            "friction_power": _build("-gamma*(m1*(v1^2 + v2^2 + v3^2) + m2*(v4^2 + v5^2 + v6^2))", L6, numeric, subs),
        },
    )


# ---------------------------------------------------------------------------
# Counterexamples on R^4
# ---------------------------------------------------------------------------

def _at_origin(x: np.ndarray) -> bool:
    return float(np.linalg.norm(x)) < 1e-9


def _r4_linear(values: dict[str, str]) -> ExampleEntry:
    H1 = ChartSpec(1, HAMILTONIAN)
    H = _build("p1^2/2 + z", H1, {})
    sys = HamiltonianSystem(H1, H, {}, "r4_linear", exclude=_at_origin)
    Y = _components(["0", "0", "1", "0"], H1, {}, label="Y")
    Z = _components(["0", "q1/2", "p1/2", "z + p1"], H1, {}, label="Z")
    shift = DiffeoSpec.from_components([_build(e, H1, {}) for e in ("t", "q1", "p1 + 1", "z")], label="Phi^1")
    scale_p = DiffeoSpec.from_components([_build(e, H1, {}) for e in ("t", "q1", "2*p1", "z")], label="Phi_2p")
    return ExampleEntry(
        name="r4_linear",
        description="H = p^2/2 + z on R^4 minus the origin",
        system=sys,
        params=values,
        schema={},
        box=_box(H1, (-2.0, 2.0)),
        initial=np.array([0.0, 0.0, 1.0, 0.0]),
        t_span=(0.0, 1.0),
        quantities=[RegisteredQuantity("p", DISSIPATED, _build("p1", H1, {})),
                    RegisteredQuantity("H", DISSIPATED, H)],
        symmetries=[
            RegisteredSymmetry("Y", Y, {GENERALIZED: PASS, DYNAMICAL: FAIL, STRICT_HAMILTONIAN: FAIL}),
            RegisteredSymmetry("Z", Z, {GENERALIZED: PASS, DYNAMICAL: PASS}),
            RegisteredSymmetry("[Y,Z]", BracketField(Y, Z), {GENERALIZED: FAIL, DYNAMICAL: FAIL}),
            RegisteredSymmetry("Phi^1", shift, {"generalized": FAIL}),
            RegisteredSymmetry("Phi_2p", scale_p, {"conformal-cocontactomorphism": FAIL}),
        ],
        observables={"H": H},
    )


def _cartan_counterexample(values: dict[str, str]) -> ExampleEntry:
    H1 = ChartSpec(1, HAMILTONIAN)
    H = _build("exp(q1 - z)", H1, {})
    sys = HamiltonianSystem(H1, H, {}, "cartan_counterexample")
    Y1 = _components(["0", "0", "0", "q1"], H1, {}, label="Y1")
    Y2 = _components(["0", "0", "(p1 - 1)*exp(q1 - z)", "-exp(q1 - z)"], H1, {}, label="Y2")
    zero = ConstantField(0.0, H1.d)
    return ExampleEntry(
        name="cartan_counterexample",
        description="H = exp(q - z): Cartan symmetries that are not conformal Hamiltonian",
        system=sys,
        params=values,
        schema={},
        box=_box(H1, (-2.0, 2.0)),
        initial=np.array([0.0, 0.0, 0.5, 0.0]),
        t_span=(0.0, 1.0),
        quantities=[RegisteredQuantity("H", DISSIPATED, H)],
        symmetries=[
            RegisteredSymmetry("Y1", Y1, {GENERALIZED: FAIL, CONFORMAL_HAMILTONIAN: FAIL, CARTAN: PASS},
                               witness=CartanWitness(zero, _build("q1", H1, {}))),
            RegisteredSymmetry("Y2", Y2, {GENERALIZED: PASS, CONFORMAL_COCONTACTOMORPHISM: PASS,
                                          CONFORMAL_HAMILTONIAN: PASS, STRICT_HAMILTONIAN: FAIL, CARTAN: PASS},
                               witness=CartanWitness(_build("exp(q1 - z)", H1, {}), zero)),
        ],
        observables={"H": H},
    )


def _h_preserving_counterexample(values: dict[str, str]) -> ExampleEntry:
    H1 = ChartSpec(1, HAMILTONIAN)
    H = _build("p1^2/2", H1, {})
    sys = HamiltonianSystem(H1, H, {}, "h_preserving_counterexample")
    Y = _components(["0", "0", "0", "z"], H1, {}, label="z d/dz")
    double_z = DiffeoSpec.from_components([_build(e, H1, {}) for e in ("t", "q1", "p1", "2*z")], label="Phi_2z")
    return ExampleEntry(
        name="h_preserving_counterexample",
        description="H = p^2/2: fields preserving H that are not symmetries",
        system=sys,
        params=values,
        schema={},
        box=_box(H1, (-2.0, 2.0)),
        initial=np.array([0.0, 0.0, 1.0, 0.0]),
        t_span=(0.0, 1.0),
        quantities=[RegisteredQuantity("p", CONSERVED, _build("p1", H1, {})),
                    RegisteredQuantity("p_dissipated", DISSIPATED, _build("p1", H1, {}))],
        symmetries=[
            RegisteredSymmetry("z d/dz", Y, {GENERALIZED: FAIL, DYNAMICAL: FAIL}),
            RegisteredSymmetry("Phi_2z", double_z, {"dynamical": FAIL}),
        ],
        observables={"H": H},
    )


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

_REGISTRY: dict[str, tuple[dict[str, ParamSpec], Callable[[dict[str, str]], ExampleEntry]]] = {
    "free_particle_tdm": (FREE_PARTICLE_SCHEMA, _free_particle),
    "central_potential_tdm": (CENTRAL_SCHEMA, _central_potential),
    "two_body_friction": (TWO_BODY_SCHEMA, _two_body),
    "r4_linear": ({}, _r4_linear),
    "cartan_counterexample": ({}, _cartan_counterexample),
    "h_preserving_counterexample": ({}, _h_preserving_counterexample),
}

EXAMPLE_NAMES = tuple(_REGISTRY)


def build_example(name: str, params: Mapping[str, object] | None = None) -> ExampleEntry:
    if name not in _REGISTRY:
        raise UnknownExample(name, EXAMPLE_NAMES)
    schema, builder = _REGISTRY[name]
    values = resolve_params(schema, params or {})
    entry = builder(values)
    log.debug("Built example %s with params %s", name, values)
    return entry


def list_examples() -> list[str]:
    return [build_example(name).summary() for name in EXAMPLE_NAMES]


def sampler_for(entry: ExampleEntry, which: str = PRIMARY, count: int = config.SAMPLE_COUNT,
                seed: int = config.SAMPLE_SEED) -> BoxSampler:
    return BoxSampler(entry.box_for(which), count, seed, entry.system_for(which).exclude)


def check_registered(entry: ExampleEntry, sym: RegisteredSymmetry, sampler: BoxSampler | None = None,
                     tol: Tolerance | None = None) -> dict[str, str]:
    """Run the checker matching the symmetry's target and return verdicts by class name."""
    sys = entry.system_for(sym.system)
    sampler = sampler or sampler_for(entry, sym.system)
    target = sym.target
    verdicts: dict[str, str] = {}
    if isinstance(target, DiffeoSpec):
        for kind in sym.expected:
            verdicts[kind] = check_diffeomorphism(target, sys, sampler, kind, tol).verdict(kind)
    elif isinstance(target, LiftSpec):
        result = check_extended_natural(target, sys, sampler, tol)
        verdicts.update({k: v.verdict for k, v in result.report.verdicts.items()})
    elif ACTION_SYMMETRY in sym.expected:
        report = check_action_symmetry(sys, sampler, tol, zeta_full=target)
        verdicts.update({k: v.verdict for k, v in report.verdicts.items()})
    else:
        report = classify_infinitesimal(target, sys, sampler, tol)
        verdicts.update({k: v.verdict for k, v in report.verdicts.items()})
        if sym.witness is not None:
            cartan = check_cartan(target, sym.witness, sys, sampler, tol)
            verdicts.update({k: v.verdict for k, v in cartan.report.verdicts.items()})
    mismatched = {k: verdicts.get(k) for k, v in sym.expected.items() if verdicts.get(k) != v}
    if mismatched:
        log.warning("%s/%s disagrees with its registered verdicts: %s", entry.name, sym.name, mismatched)
    return verdicts
