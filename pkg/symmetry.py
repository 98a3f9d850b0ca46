"""
Residual-backed classification of candidate symmetries.

Infinitesimal classes tested by `classify_infinitesimal` (E is the energy: H,
or E_L on a Lagrangian chart; X is X_H or Gamma_L):

    generalized                    tau(Y) = 0, eta([Y, X]) = 0
    dynamical                      tau(Y) = 0, [Y, X] = 0
    conformal_cocontactomorphism   tau(Y) = 0, L_Y tau = 0, L_Y eta = rho eta
    conformal_hamiltonian          ... and Y(E) = rho E
    strict_hamiltonian             ... with rho = 0
    reeb_preserving                [Y, R_t] = [Y, R_z] = 0 (outside the lattice)

rho is estimated pointwise as (L_Y eta)(R_z). A pass is a sampled certificate:
every condition holds within tolerance at every sample. All charts handled here
are products R x N with N a contact manifold.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

import config
from ad_core import Jet, jacobian_fd
from errors import DomainError, JacobianSingular, NonSmoothWarning, SampleDomainError
from fields import AD2, FD, JetField, MapField, ScalarField, VectorField
from hamiltonian import DISSIPATED, QUANTITY_KINDS, Tolerance, eta_of_field_jet, quantity_terms
from phase_space import HAMILTONIAN, ChartSpec, coords, darboux_frame

log = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"

GENERALIZED = "generalized"
DYNAMICAL = "dynamical"
CONFORMAL_COCONTACTOMORPHISM = "conformal_cocontactomorphism"
CONFORMAL_HAMILTONIAN = "conformal_hamiltonian"
STRICT_HAMILTONIAN = "strict_hamiltonian"
REEB_PRESERVING = "reeb_preserving"
INFINITESIMAL_CLASSES = (GENERALIZED, DYNAMICAL, CONFORMAL_COCONTACTOMORPHISM,
                         CONFORMAL_HAMILTONIAN, STRICT_HAMILTONIAN, REEB_PRESERVING)

# (stronger, weaker): a pass at the first implies a pass at the second.
INCLUSIONS = (
    (STRICT_HAMILTONIAN, CONFORMAL_HAMILTONIAN),
    (CONFORMAL_HAMILTONIAN, CONFORMAL_COCONTACTOMORPHISM),
    (CONFORMAL_HAMILTONIAN, GENERALIZED),
    (DYNAMICAL, GENERALIZED),
)

DIFFEO_KINDS = ("dynamical", "generalized", "conformal-cocontactomorphism",
                "conformal-hamiltonian", "strict-hamiltonian")

PRODUCT_ASSUMPTION = "M = R x N with N a contact manifold (all Darboux and velocity charts)"


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def default_box(chart: ChartSpec, half_width: float = config.DEFAULT_BOX_HALF_WIDTH) -> list[tuple[float, float]]:
    return [(-half_width, half_width)] * chart.d


@dataclass
class BoxSampler:
    """Uniform points in a box, skipping those the exclusion predicate rejects."""

    box: Sequence[tuple[float, float]]
    count: int = config.SAMPLE_COUNT
    seed: int = config.SAMPLE_SEED
    exclude: Callable[[np.ndarray], bool] | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"sample count must be positive, got {self.count}")
        for lo, hi in self.box:
            if not lo <= hi:
                raise ValueError(f"box bound {lo}:{hi} is empty")

    def candidates(self) -> Iterator[np.ndarray]:
        rng = np.random.default_rng(self.seed)
        lo = np.array([b[0] for b in self.box], dtype=float)
        hi = np.array([b[1] for b in self.box], dtype=float)
        for _ in range(self.count * config.SAMPLE_ATTEMPT_FACTOR):
            x = lo + (hi - lo) * rng.random(lo.shape[0])
            if self.exclude is not None and self.exclude(x):
                continue
            yield x

    def points(self) -> list[np.ndarray]:
        points = []
        for x in self.candidates():
            points.append(x)
            if len(points) == self.count:
                return points
        raise SampleDomainError(f"only {len(points)} of {self.count} samples fall outside the excluded set")


def sample_residuals(sampler: BoxSampler, sys, fn: Callable[[np.ndarray], dict]) -> list[dict]:
    """Evaluate `fn` at `sampler.count` admissible points.

    Points excluded by the system, or where abs() was differentiated at 0, are
    skipped. A DomainError at a sample means the fields are undefined there.
    """
    results = []
    exclude = getattr(sys, "exclude", None)
    for x in sampler.candidates():
        if exclude is not None and exclude(x):
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NonSmoothWarning)
            try:
                result = fn(x)
            except DomainError as exc:
                raise SampleDomainError(f"fields are undefined at sample {x.tolist()}: {exc}") from exc
        if any(issubclass(w.category, NonSmoothWarning) for w in caught):
            log.warning("Discarding sample %s: non-smooth point", np.array2string(x, precision=4))
            continue
        results.append(result)
        if len(results) == sampler.count:
            return results
    raise SampleDomainError(f"only {len(results)} of {sampler.count} samples were admissible")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class ClassVerdict:
    name: str
    verdict: str
    max_residual: float
    samples: int
    rho_estimate: tuple[float, float] | None = None
    note: str | None = None

    def to_dict(self, seed: int) -> dict:
        out = {
            "class": self.name,
            "verdict": self.verdict,
            "max_residual": self.max_residual,
            "samples": self.samples,
            "seed": seed,
        }
        if self.rho_estimate is not None:
            out["rho_estimate"] = {"min": self.rho_estimate[0], "max": self.rho_estimate[1]}
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class SymmetryReport:
    subject: str
    system: str
    seed: int
    samples: int
    tolerance: Tolerance
    verdicts: dict[str, ClassVerdict] = field(default_factory=dict)
    assumptions: list[str] = field(default_factory=lambda: [PRODUCT_ASSUMPTION])

    def verdict(self, name: str) -> str:
        return self.verdicts[name].verdict

    def passed(self, name: str) -> bool:
        return self.verdict(name) == PASS

    @property
    def all_passed(self) -> bool:
        return all(v.verdict != FAIL for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "system": self.system,
            "seed": self.seed,
            "samples": self.samples,
            "tolerance": {"atol": self.tolerance.atol, "rtol": self.tolerance.rtol},
            "assumptions": list(self.assumptions),
            "classes": [v.to_dict(self.seed) for v in self.verdicts.values()],
        }


def reduce_rows(name: str, rows: list[dict], tol: Tolerance, rho_key: str | None = None) -> ClassVerdict:
    """Fold per-sample {condition: (residual, scale)} rows into one verdict."""
    ok = True
    worst = 0.0
    for row in rows:
        for residual, scale in row[name]:
            worst = max(worst, abs(residual))
            ok = ok and tol.passes(residual, scale)
    rho = None
    if rho_key is not None:
        values = [row[rho_key] for row in rows]
        rho = (float(min(values)), float(max(values)))
    return ClassVerdict(name, PASS if ok else FAIL, worst, len(rows), rho)


def enforce_inclusions(report: SymmetryReport) -> None:
    for strong, weak in INCLUSIONS:
        if strong not in report.verdicts or weak not in report.verdicts:
            continue
        if report.passed(strong) and not report.passed(weak):
            v = report.verdicts[weak]
            log.warning("%s: %s passes but %s does not (max residual %.3g); promoting %s",
                        report.subject, strong, weak, v.max_residual, weak)
            v.verdict = PASS
            v.note = f"implied by {strong}; own check failed with max residual {v.max_residual:.3g}"


# ---------------------------------------------------------------------------
# Brackets and Lie derivatives
# ---------------------------------------------------------------------------

class DynamicsField(VectorField):
    """X_H or Gamma_L of a system, viewed as a vector field."""

    def __init__(self, sys):
        self.sys = sys
        self.label = "X"
        self.differentiability = AD2 if sys.chart.kind == HAMILTONIAN else FD

    def __call__(self, x) -> np.ndarray:
        return self.sys.field(coords(x))

    def jacobian(self, x) -> np.ndarray:
        if hasattr(self.sys, "field_jacobian"):
            return self.sys.field_jacobian(coords(x))
        return super().jacobian(x)

    def directional(self, x, w) -> np.ndarray:
        return self.sys.field_directional(coords(x), w)


def _as_field(X) -> VectorField:
    return X if isinstance(X, VectorField) else DynamicsField(X)


def lie_bracket(Y: VectorField, X, point) -> np.ndarray:
    """[Y, X]^k = Y(X^k) - X(Y^k). X may be a vector field or a system."""
    x = coords(point)
    X = _as_field(X)
    return X.directional(x, Y(x)) - Y.directional(x, X(x))


class BracketField(VectorField):
    def __init__(self, Y1: VectorField, Y2, label: str = ""):
        self.Y1 = Y1
        self.Y2 = _as_field(Y2)
        self.label = label or f"[{Y1.label},{self.Y2.label}]"

    def __call__(self, x) -> np.ndarray:
        return lie_bracket(self.Y1, self.Y2, x)


def _frame(sys_or_chart, x):
    if isinstance(sys_or_chart, ChartSpec):
        return darboux_frame(sys_or_chart, x)
    return sys_or_chart.frame(x)


def lie_derivative_eta(Y: VectorField, sys_or_chart, point) -> np.ndarray:
    """L_Y eta = i_Y d eta + d(eta(Y))."""
    x = coords(point)
    return _frame(sys_or_chart, x).eta_lie_derivative(Y(x), Y.jacobian(x))


def conformal_bracket_factor(Y1: VectorField, rho1: ScalarField, Y2: VectorField, rho2: ScalarField, point) -> float:
    """Conformal factor of [Y1, Y2] for conformal symmetries with factors rho1, rho2: Y1(rho2) - Y2(rho1)."""
    x = coords(point)
    return float(rho2.jet(x, 1).grad @ Y1(x) - rho1.jet(x, 1).grad @ Y2(x))


# ---------------------------------------------------------------------------
# Infinitesimal classification
# ---------------------------------------------------------------------------

def _norm(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def _infinitesimal_rows(Y: VectorField, sys, x: np.ndarray) -> dict:
    frame = sys.frame(x)
    y = Y(x)
    JY = Y.jacobian(x)
    X = sys.field(x)
    E = sys.energy_jet(x, 1)

    tau_y = (float(frame.tau @ y), 0.0)
    push = sys.field_directional(x, y)
    pull = JY @ X
    bracket = push - pull
    bracket_scale = max(_norm(push), _norm(pull))
    eta_scale = _norm(frame.eta) * bracket_scale

    lie_tau = JY.T @ frame.tau
    lie_eta = frame.eta_lie_derivative(y, JY)
    rho = float(lie_eta @ frame.reeb_z)
    eta_scale_conf = max(_norm(lie_eta), abs(rho) * _norm(frame.eta))
    y_e = float(E.grad @ y)
    e_scale = max(abs(y_e), abs(rho * E.value))

    rt_field = MapField(lambda p: sys.frame(p).reeb_t)
    rz_field = MapField(lambda p: sys.frame(p).reeb_z)
    rt, rz = frame.reeb_t, frame.reeb_z
    br_t = rt_field.directional(x, y) - JY @ rt
    br_z = rz_field.directional(x, y) - JY @ rz

    conformal_conditions = [
        tau_y,
        (_norm(lie_tau), 0.0),
        (_norm(lie_eta - rho * frame.eta), eta_scale_conf),
    ]
    return {
        "rho": rho,
        GENERALIZED: [tau_y, (float(frame.eta @ bracket), eta_scale)],
        DYNAMICAL: [tau_y, (_norm(bracket), bracket_scale)],
        CONFORMAL_COCONTACTOMORPHISM: conformal_conditions,
        CONFORMAL_HAMILTONIAN: conformal_conditions + [(y_e - rho * E.value, e_scale)],
        STRICT_HAMILTONIAN: [tau_y, (_norm(lie_tau), 0.0), (_norm(lie_eta), 0.0), (y_e, 0.0)],
        REEB_PRESERVING: [(_norm(br_t), _norm(JY @ rt)), (_norm(br_z), _norm(JY @ rz))],
    }


def classify_infinitesimal(Y: VectorField, sys, sampler: BoxSampler, tol: Tolerance | None = None) -> SymmetryReport:
    tol = tol or Tolerance()
    rows = sample_residuals(sampler, sys, lambda x: _infinitesimal_rows(Y, sys, x))
    report = SymmetryReport(Y.label, sys.name, sampler.seed, len(rows), tol)
    for name in INFINITESIMAL_CLASSES:
        rho_key = "rho" if name in (CONFORMAL_COCONTACTOMORPHISM, CONFORMAL_HAMILTONIAN) else None
        report.verdicts[name] = reduce_rows(name, rows, tol, rho_key)
    enforce_inclusions(report)
    log.info("Classified %s on %s over %d samples: %s", Y.label, sys.name, len(rows),
             ", ".join(f"{k}={v.verdict}" for k, v in report.verdicts.items()))
    return report


def check_quantity(f: ScalarField, sys, sampler: BoxSampler, kind: str = DISSIPATED,
                   tol: Tolerance | None = None, label: str = "f") -> SymmetryReport:
    """Pointwise dissipated/conserved test of `f` at the sampler's points."""
    if kind not in QUANTITY_KINDS:
        raise ValueError(f"Unknown quantity kind '{kind}' (expected {' or '.join(QUANTITY_KINDS)})")
    tol = tol or Tolerance()
    rows = sample_residuals(sampler, sys, lambda x: {kind: [quantity_terms(f, sys, kind, x)]})
    report = SymmetryReport(label, sys.name, sampler.seed, len(rows), tol)
    report.verdicts[kind] = reduce_rows(kind, rows, tol)
    log.info("%s is %s on %s over %d samples: %s", label, kind, sys.name, len(rows), report.verdict(kind))
    return report


# ---------------------------------------------------------------------------
# Cartan symmetries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CartanWitness:
    rho: ScalarField
    g: ScalarField


class ReducedField(VectorField):
    """Z = Y - g R_z."""

    def __init__(self, Y: VectorField, g: ScalarField, sys):
        self.Y = Y
        self.g = g
        self.sys = sys
        self.label = f"{Y.label} - g R_z"
        self.differentiability = Y.differentiability if sys.chart.kind == HAMILTONIAN else FD

    def __call__(self, x) -> np.ndarray:
        x = coords(x)
        return self.Y(x) - self.g(x) * self.sys.frame(x).reeb_z

    def jacobian(self, x) -> np.ndarray:
        x = coords(x)
        if self.sys.chart.kind == HAMILTONIAN:
            return self.Y.jacobian(x) - np.outer(self.sys.frame(x).reeb_z, self.g.jet(x, 1).grad)
        return super().jacobian(x)

    def directional(self, x, w) -> np.ndarray:
        if self.sys.chart.kind == HAMILTONIAN:
            return self.jacobian(x) @ np.asarray(w, dtype=float)
        return super().directional(x, w)


@dataclass
class CartanResult:
    report: SymmetryReport
    quantity: JetField | None
    reduced_field: ReducedField | None


CARTAN = "cartan"
CARTAN_QUANTITY = "cartan_quantity_dissipated"
REDUCED_GENERALIZED = "reduced_generalized"


def cartan_quantity(Y: VectorField, witness: CartanWitness, sys) -> JetField:
    """f = g - eta(Y)."""
    def jet_fn(x, order):
        order = min(order, 1)
        return witness.g.jet(x, order) - eta_of_field_jet(Y, sys, x, order)

    return JetField(jet_fn, f"g - eta({Y.label})")


def check_cartan(Y: VectorField, witness: CartanWitness, sys, sampler: BoxSampler,
                 tol: Tolerance | None = None) -> CartanResult:
    tol = tol or Tolerance()
    f = cartan_quantity(Y, witness, sys)
    Z = ReducedField(Y, witness.g, sys)

    def row(x):
        frame = sys.frame(x)
        y = Y(x)
        lie_eta = frame.eta_lie_derivative(y, Y.jacobian(x))
        rho = witness.rho.jet(x, 1)
        g = witness.g.jet(x, 1)
        E = sys.energy_jet(x, 1)
        rz_e = float(E.grad @ frame.reeb_z)
        y_e = float(E.grad @ y)
        rhs = rho.value * frame.eta + g.grad
        zx = Z(x)
        z_push, z_pull = sys.field_directional(x, zx), Z.jacobian(x) @ sys.field(x)
        return {
            CARTAN: [
                (float(frame.tau @ y), 0.0),
                (_norm(lie_eta - rhs), max(_norm(lie_eta), _norm(rhs))),
                (y_e - rho.value * E.value - g.value * rz_e, max(abs(y_e), abs(rho.value * E.value), abs(g.value * rz_e))),
            ],
            CARTAN_QUANTITY: [quantity_terms(f, sys, DISSIPATED, x)],
            REDUCED_GENERALIZED: [
                (float(frame.tau @ zx), 0.0),
                (float(frame.eta @ (z_push - z_pull)), _norm(frame.eta) * max(_norm(z_push), _norm(z_pull))),
            ],
        }

    rows = sample_residuals(sampler, sys, row)
    report = SymmetryReport(Y.label, sys.name, sampler.seed, len(rows), tol)
    report.verdicts[CARTAN] = reduce_rows(CARTAN, rows, tol)
    passed = report.passed(CARTAN)
    for name in (CARTAN_QUANTITY, REDUCED_GENERALIZED):
        verdict = reduce_rows(name, rows, tol)
        if not passed:
            verdict.verdict = NOT_APPLICABLE
        report.verdicts[name] = verdict
    log.info("Cartan check of %s on %s: %s", Y.label, sys.name, report.verdict(CARTAN))
    return CartanResult(report, f if passed else None, Z if passed else None)


# ---------------------------------------------------------------------------
# Finite maps
# ---------------------------------------------------------------------------

@dataclass
class DiffeoSpec:
    """A map Phi on the chart with an optional analytic Jacobian."""

    forward: Callable[[np.ndarray], np.ndarray]
    jacobian_fn: Callable[[np.ndarray], np.ndarray] | None = None
    fd_step: float = config.FD_STEP
    label: str = "Phi"

    @classmethod
    def from_components(cls, components: Sequence[ScalarField], label: str = "Phi") -> "DiffeoSpec":
        def forward(x):
            return np.array([c(x) for c in components], dtype=float)

        def jacobian(x):
            return np.vstack([c.jet(x, 1).grad for c in components])

        return cls(forward, jacobian, label=label)

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.forward(coords(x)), dtype=float)

    def jacobian(self, x) -> np.ndarray:
        x = coords(x)
        if self.jacobian_fn is not None:
            J = np.asarray(self.jacobian_fn(x), dtype=float)
        else:
            J = jacobian_fd(self.forward, x, self.fd_step)
        if np.linalg.cond(J) > config.JACOBIAN_COND_LIMIT:
            raise JacobianSingular(f"Jacobian of {self.label} is singular at {x.tolist()}")
        return J


def _diffeo_row(phi: DiffeoSpec, sys, kind: str, x: np.ndarray) -> dict:
    y = phi(x)
    D = phi.jacobian(x)
    chart = sys.chart
    e_t = np.zeros(chart.d)
    e_t[0] = 1.0
    conditions = [(y[0] - x[0], abs(x[0])), (_norm(D[0] - e_t), 0.0)]
    row = {}
    if kind in ("dynamical", "generalized"):
        pushed = D @ sys.field(x)
        target = sys.field(y)
        if kind == "dynamical":
            conditions.append((_norm(pushed - target), max(_norm(pushed), _norm(target))))
        else:
            eta_y = sys.frame(y).eta
            a, b = float(eta_y @ pushed), float(eta_y @ target)
            conditions.append((a - b, max(abs(a), abs(b))))
    else:
        frame_x = sys.frame(x)
        pulled = D.T @ sys.frame(y).eta
        factor = float(pulled @ frame_x.reeb_z)
        row["rho"] = factor
        conditions.append((_norm(pulled - factor * frame_x.eta), _norm(pulled)))
        if kind in ("conformal-hamiltonian", "strict-hamiltonian"):
            e_y, e_x = sys.energy_jet(y, 0).value, sys.energy_jet(x, 0).value
            conditions.append((e_y - factor * e_x, max(abs(e_y), abs(factor * e_x))))
        if kind == "strict-hamiltonian":
            conditions.append((factor - 1.0, 1.0))
    row[kind] = conditions
    return row


def check_diffeomorphism(phi: DiffeoSpec, sys, sampler: BoxSampler, kind: str,
                         tol: Tolerance | None = None) -> SymmetryReport:
    if kind not in DIFFEO_KINDS:
        raise ValueError(f"Unknown symmetry kind '{kind}' (expected one of {', '.join(DIFFEO_KINDS)})")
    tol = tol or Tolerance()
    rows = sample_residuals(sampler, sys, lambda x: _diffeo_row(phi, sys, kind, x))
    report = SymmetryReport(phi.label, sys.name, sampler.seed, len(rows), tol)
    rho_key = "rho" if kind.startswith("conformal") or kind.startswith("strict") else None
    report.verdicts[kind] = reduce_rows(kind, rows, tol, rho_key)
    log.info("Map %s on %s as %s symmetry: %s", phi.label, sys.name, kind, report.verdict(kind))
    return report


def transport_quantity(f: ScalarField, phi: DiffeoSpec) -> JetField:
    """f o Phi with jets up to order 1."""

    def jet_fn(x, order):
        y = phi(x)
        if order == 0:
            return Jet.constant(f(y), x.shape[0])
        fy = f.jet(y, 1)
        return Jet(fy.value, phi.jacobian(x).T @ fy.grad, None, 1)

    return JetField(jet_fn, f"f o {phi.label}")
