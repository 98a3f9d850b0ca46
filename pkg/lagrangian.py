"""
Cocontact Lagrangian engine on charts (t, q1..qn, v1..vn, z).

For a regular Lagrangian L(t, q, v, z):

    E_L   = v^i L_{v^i} - L
    eta_L = dz - L_{v^i} dq^i
    W_ij  = L_{v^i v^j}

and the Herglotz-Euler-Lagrange field Gamma_L is the unique second-order field
with i_Gamma eta_L = -E_L solving the cocontact Hamiltonian equations for
(dt, eta_L, E_L). Everything here works from one order-2 jet of L per point;
brackets involving Gamma_L differentiate it by central differences.
"""

import logging
import threading
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

import config
from ad_core import Jet, directional_derivative_fd
from errors import NewtonNoConvergence, RegularityError
from fields import AD2, JetField, ScalarField, VectorField, check_dependence
from hamiltonian import DISSIPATED, HamiltonianSystem, Tolerance, quantity_terms
from phase_space import HAMILTONIAN, LAGRANGIAN, ChartSpec, CocontactFrame, coords
from symmetry import (NOT_APPLICABLE, BoxSampler, SymmetryReport, classify_infinitesimal, reduce_rows,
                      sample_residuals)

log = logging.getLogger(__name__)


def _check_regular(W: np.ndarray, threshold: float = config.REGULARITY_THRESHOLD) -> None:
    scale = float(np.max(np.abs(W))) if W.size else 0.0
    if scale == 0.0 or abs(np.linalg.det(W)) <= threshold * scale ** W.shape[0]:
        raise RegularityError(f"velocity Hessian is singular (det={np.linalg.det(W):.3g}, scale={scale:.3g})")


class LagrangianSystem:
    kind = LAGRANGIAN

    def __init__(self, chart: ChartSpec, L: ScalarField, params: Mapping[str, float] | None = None,
                 name: str = "", exclude: Callable[[np.ndarray], bool] | None = None):
        chart.require(LAGRANGIAN)
        self.chart = chart
        self.L = L
        self.params = dict(params or {})
        self.name = name or "lagrangian"
        self.exclude = exclude

    def __repr__(self) -> str:
        return f"LagrangianSystem({self.name}, n={self.chart.n})"

    def jet(self, x, order: int = 2) -> Jet:
        return self.L.jet(coords(x), order)

    def frame(self, x) -> CocontactFrame:
        return lagrangian_frame(self, x)

    def energy_jet(self, x, order: int = 1) -> Jet:
        """E_L with derivatives up to order 1."""
        x = coords(x)
        c = self.chart
        Lj = self.jet(x, 2 if order >= 1 else 1)
        v = x[c.fiber]
        value = float(v @ Lj.grad[c.fiber]) - Lj.value
        if order == 0:
            return Jet.constant(value, c.d)
        grad = v @ Lj.hess[c.fiber] - Lj.grad
        grad[c.fiber] += Lj.grad[c.fiber]
        return Jet(value, grad, None, 1)

    def dissipation_rate(self, x) -> float:
        """R_z^L(E_L), which equals -dL/dz."""
        return -float(self.jet(x, 1).grad[self.chart.z])

    def field(self, x) -> np.ndarray:
        return herglotz_field(self, x)

    def field_directional(self, x, w) -> np.ndarray:
        return directional_derivative_fd(self.field, coords(x), w)


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LagrangianGeometry:
    E_L: float
    theta_L: np.ndarray
    eta_L: np.ndarray
    W: np.ndarray
    W_inv: np.ndarray


def lagrangian_geometry(sys: LagrangianSystem, point) -> LagrangianGeometry:
    x = coords(point)
    c = sys.chart
    Lj = sys.jet(x, 2)
    W = Lj.hess[c.fiber, c.fiber]
    _check_regular(W)
    theta = np.zeros(c.d)
    theta[c.q] = Lj.grad[c.fiber]
    eta = -theta
    eta[c.z] = 1.0
    E = float(x[c.fiber] @ Lj.grad[c.fiber]) - Lj.value
    return LagrangianGeometry(E, theta, eta, W, np.linalg.inv(W))


def lagrangian_frame(sys: LagrangianSystem, point) -> CocontactFrame:
    """(dt, eta_L, d eta_L) at a point; d eta_L = -d(L_{v^i}) ^ dq^i."""
    x = coords(point)
    c = sys.chart
    Lj = sys.jet(x, 2)
    _check_regular(Lj.hess[c.fiber, c.fiber])
    tau = np.zeros(c.d)
    tau[0] = 1.0
    eta = np.zeros(c.d)
    eta[c.q] = -Lj.grad[c.fiber]
    eta[c.z] = 1.0
    theta_grads = Lj.hess[c.fiber].copy()
    deta = np.zeros((c.d, c.d))
    for i in range(c.n):
        e_q = np.zeros(c.d)
        e_q[1 + i] = 1.0
        deta -= np.outer(theta_grads[i], e_q) - np.outer(e_q, theta_grads[i])
    return CocontactFrame(c, tau, eta, deta, theta_grads)


def legendre_map(sys: LagrangianSystem, point) -> np.ndarray:
    """(t, q, v, z) -> (t, q, dL/dv, z)."""
    x = coords(point)
    c = sys.chart
    Lj = sys.jet(x, 2)
    _check_regular(Lj.hess[c.fiber, c.fiber])
    y = x.copy()
    y[c.fiber] = Lj.grad[c.fiber]
    return y


def legendre_inverse(sys: LagrangianSystem, ham_point, guess: Sequence[float] | None = None,
                     tol: float = config.NEWTON_TOL, max_iter: int = config.NEWTON_MAX_ITER) -> np.ndarray:
    """Newton iteration on v -> dL/dv - p starting from the velocity `guess`."""
    y = coords(ham_point)
    c = sys.chart
    p = y[c.fiber]
    v = np.zeros(c.n) if guess is None else np.array(guess, dtype=float)
    threshold = tol * max(1.0, float(np.max(np.abs(p))))
    x = y.copy()
    for iteration in range(max_iter + 1):
        x = y.copy()
        x[c.fiber] = v
        Lj = sys.jet(x, 2)
        residual = Lj.grad[c.fiber] - p
        if float(np.max(np.abs(residual))) < threshold:
            log.debug("Legendre inverse converged in %d iteration(s)", iteration)
            return x
        if iteration == max_iter:
            break
        W = Lj.hess[c.fiber, c.fiber]
        _check_regular(W)
        v = v - np.linalg.solve(W, residual)
    raise NewtonNoConvergence(f"Legendre inverse did not converge in {max_iter} iterations", last_iterate=x)


def reeb_fields_L(sys: LagrangianSystem, point) -> tuple[np.ndarray, np.ndarray]:
    """R_t^L = d/dt - W^-1 L_tv d/dv and R_z^L = d/dz - W^-1 L_zv d/dv."""
    x = coords(point)
    c = sys.chart
    Lj = sys.jet(x, 2)
    W = Lj.hess[c.fiber, c.fiber]
    _check_regular(W)
    R_t = np.zeros(c.d)
    R_t[0] = 1.0
    R_t[c.fiber] = -np.linalg.solve(W, Lj.hess[0, c.fiber])
    R_z = np.zeros(c.d)
    R_z[c.z] = 1.0
    R_z[c.fiber] = -np.linalg.solve(W, Lj.hess[c.z, c.fiber])
    return R_t, R_z


def herglotz_field(sys: LagrangianSystem, point) -> np.ndarray:
    x = coords(point)
    c = sys.chart
    Lj = sys.jet(x, 2)
    g, hs = Lj.grad, Lj.hess
    W = hs[c.fiber, c.fiber]
    _check_regular(W)
    v = x[c.fiber]
    force = (g[c.q] - hs[0, c.fiber] - hs[c.fiber, c.q] @ v
             - Lj.value * hs[c.z, c.fiber] + g[c.z] * g[c.fiber])
    X = np.empty(c.d)
    X[0] = 1.0
    X[c.q] = v
    X[c.fiber] = np.linalg.solve(W, force)
    X[c.z] = Lj.value
    return X


def vertical_endomorphism(chart: ChartSpec, V) -> np.ndarray:
    """S = d/dv^i (x) dq^i applied to a tangent vector."""
    chart.require(LAGRANGIAN)
    V = np.asarray(V, dtype=float)
    out = np.zeros(chart.d)
    out[chart.fiber] = V[chart.q]
    return out


def liouville_field(chart: ChartSpec, point) -> np.ndarray:
    """Delta = v^i d/dv^i."""
    chart.require(LAGRANGIAN)
    x = coords(point)
    out = np.zeros(chart.d)
    out[chart.fiber] = x[chart.fiber]
    return out


def sode_residual(sys: LagrangianSystem, point) -> float:
    """|S(Gamma_L) - Delta|: Gamma_L is a second-order field."""
    x = coords(point)
    gamma = herglotz_field(sys, x)
    return float(np.max(np.abs(vertical_endomorphism(sys.chart, gamma) - liouville_field(sys.chart, x))))


def lagrangian_quantity_residual(f: ScalarField, sys: LagrangianSystem, kind: str, point) -> float:
    """dissipated: Gamma_L(f) - (dL/dz) f; conserved: Gamma_L(f)."""
    return quantity_terms(f, sys, kind, point)[0]


def reeb_energy_identity_residual(sys: LagrangianSystem, point) -> float:
    """dL/dz + R_z^L(E_L)."""
    x = coords(point)
    _, R_z = reeb_fields_L(sys, x)
    return float(sys.jet(x, 1).grad[sys.chart.z] + sys.energy_jet(x, 1).grad @ R_z)


# ---------------------------------------------------------------------------
# Lifts
# ---------------------------------------------------------------------------

COMPLETE = "complete"
VERTICAL = "vertical"


@dataclass(frozen=True)
class LiftSpec:
    """Base field Y^i(q) d/dq^i plus an optional zeta(z) d/dz."""

    base: tuple[ScalarField, ...]
    zeta: ScalarField | None = None
    label: str = "Y"

    def validate(self, chart: ChartSpec, point=None) -> None:
        if len(self.base) != chart.n:
            raise ValueError(f"lift needs {chart.n} base components, got {len(self.base)}")
        q_names = chart.names[chart.q]
        for i, component in enumerate(self.base):
            check_dependence(component, q_names, chart, point, f"{self.label} component {i + 1}")
        if self.zeta is not None:
            check_dependence(self.zeta, ("z",), chart, point, f"{self.label} zeta")


def lift(spec: LiftSpec, which: str, chart: ChartSpec, point) -> np.ndarray:
    """Complete lift Y^i d/dq^i + v^j dY^i/dq^j d/dv^i + zeta d/dz, or vertical lift Y^i d/dv^i."""
    chart.require(LAGRANGIAN)
    x = coords(point)
    spec.validate(chart, x)
    out = np.zeros(chart.d)
    if which == VERTICAL:
        out[chart.fiber] = [c(x) for c in spec.base]
        return out
    if which != COMPLETE:
        raise ValueError(f"Unknown lift '{which}'")
    v = x[chart.fiber]
    for i, component in enumerate(spec.base):
        j = component.jet(x, 1)
        out[1 + i] = j.value
        out[chart.n + 1 + i] = j.grad[chart.q] @ v
    if spec.zeta is not None:
        out[chart.z] = spec.zeta(x)
    return out


class LiftField(VectorField):
    """A lift as a vector field, with its exact Jacobian from order-2 jets of the base."""

    def __init__(self, spec: LiftSpec, chart: ChartSpec, which: str = COMPLETE):
        self.spec = spec
        self.chart = chart
        self.which = which
        self.label = f"{spec.label}^{'c' if which == COMPLETE else 'V'}"
        self.differentiability = AD2

    def __call__(self, x) -> np.ndarray:
        return lift(self.spec, self.which, self.chart, x)

    def jacobian(self, x) -> np.ndarray:
        x = coords(x)
        c = self.chart
        J = np.zeros((c.d, c.d))
        v = x[c.fiber]
        for i, component in enumerate(self.spec.base):
            j = component.jet(x, 2)
            if self.which == VERTICAL:
                J[c.n + 1 + i] = j.grad
                continue
            J[1 + i] = j.grad
            J[c.n + 1 + i] = v @ j.hess[c.q]
            J[c.n + 1 + i, c.fiber] += j.grad[c.q]
        if self.which == COMPLETE and self.spec.zeta is not None:
            J[c.z] = self.spec.zeta.jet(x, 1).grad
        return J

    def directional(self, x, w) -> np.ndarray:
        return self.jacobian(x) @ np.asarray(w, dtype=float)


# ---------------------------------------------------------------------------
# Lagrangian symmetries
# ---------------------------------------------------------------------------

EXTENDED_NATURAL = "extended_natural"
NATURAL_QUANTITY = "natural_quantity_dissipated"
ACTION_SYMMETRY = "action_symmetry"
LAGRANGIAN_SYMMETRY = "lagrangian_symmetry"
EXTENDED_SYMMETRY = "extended_symmetry"


def natural_quantity(spec: LiftSpec, sys: LagrangianSystem) -> JetField:
    """f = Y^V(L) - zeta = Y^i L_{v^i} - zeta, with jets up to order 1."""
    c = sys.chart

    def jet_fn(x, order):
        order = min(order, 1)
        Lj = sys.jet(x, 2)
        total = Jet.constant(0.0, c.d) if spec.zeta is None else -spec.zeta.jet(x, order)
        for i, component in enumerate(spec.base):
            Lv = Jet(Lj.grad[c.n + 1 + i], Lj.hess[c.n + 1 + i] if order >= 1 else np.zeros(c.d), None, order)
            total = total + component.jet(x, order) * Lv
        return total

    return JetField(jet_fn, f"{spec.label}^V(L) - zeta")


@dataclass
class NaturalSymmetryResult:
    report: SymmetryReport
    quantity: JetField | None
    conformal_report: SymmetryReport | None = None


def check_extended_natural(spec: LiftSpec, sys: LagrangianSystem, sampler: BoxSampler,
                           tol: Tolerance | None = None, check_conformal: bool = False) -> NaturalSymmetryResult:
    """Test Y^c(L) = zeta' L; on pass emit f = Y^V(L) - zeta and check it is dissipated.

    With `check_conformal` the complete lift is also classified against the
    cocontact structure (dt, eta_L, E_L), where it should be conformal
    Hamiltonian with factor zeta'.
    """
    tol = tol or Tolerance()
    c = sys.chart
    spec.validate(c)
    f = natural_quantity(spec, sys)

    def row(x):
        Lj = sys.jet(x, 1)
        yc = lift(spec, COMPLETE, c, x)
        zeta_prime = 0.0 if spec.zeta is None else float(spec.zeta.jet(x, 1).grad[c.z])
        lhs, rhs = float(Lj.grad @ yc), zeta_prime * Lj.value
        return {
            EXTENDED_NATURAL: [(lhs - rhs, max(abs(lhs), abs(rhs)))],
            NATURAL_QUANTITY: [quantity_terms(f, sys, DISSIPATED, x)],
            "rho": zeta_prime,
        }

    rows = sample_residuals(sampler, sys, row)
    report = SymmetryReport(spec.label, sys.name, sampler.seed, len(rows), tol)
    report.verdicts[EXTENDED_NATURAL] = reduce_rows(EXTENDED_NATURAL, rows, tol, "rho")
    passed = report.passed(EXTENDED_NATURAL)
    quantity_verdict = reduce_rows(NATURAL_QUANTITY, rows, tol)
    if not passed:
        quantity_verdict.verdict = NOT_APPLICABLE
    report.verdicts[NATURAL_QUANTITY] = quantity_verdict
    log.info("Extended natural check of %s on %s: %s", spec.label, sys.name, report.verdict(EXTENDED_NATURAL))

    conformal = None
    if passed and check_conformal:
        conformal = classify_infinitesimal(LiftField(spec, c, COMPLETE), sys, sampler, tol)
    return NaturalSymmetryResult(report, f if passed else None, conformal)


def check_action_symmetry(sys: LagrangianSystem, sampler: BoxSampler, tol: Tolerance | None = None,
                          zeta_full: ScalarField | None = None, phi_z: ScalarField | None = None) -> SymmetryReport:
    """Infinitesimal: Gamma_L(zeta) = zeta dL/dz. Finite: Gamma_L(Phi_z) = L o Phi, Phi = (t, q, v, Phi_z)."""
    if (zeta_full is None) == (phi_z is None):
        raise ValueError("give exactly one of zeta_full or phi_z")
    tol = tol or Tolerance()
    c = sys.chart

    def row(x):
        gamma = sys.field(x)
        if zeta_full is not None:
            zj = zeta_full.jet(x, 1)
            lhs, rhs = float(zj.grad @ gamma), zj.value * float(sys.jet(x, 1).grad[c.z])
        else:
            pj = phi_z.jet(x, 1)
            image = x.copy()
            image[c.z] = pj.value
            lhs, rhs = float(pj.grad @ gamma), sys.jet(image, 0).value
        return {ACTION_SYMMETRY: [(lhs - rhs, max(abs(lhs), abs(rhs)))]}

    rows = sample_residuals(sampler, sys, row)
    subject = "zeta" if zeta_full is not None else "Phi_z"
    report = SymmetryReport(subject, sys.name, sampler.seed, len(rows), tol)
    report.verdicts[ACTION_SYMMETRY] = reduce_rows(ACTION_SYMMETRY, rows, tol)
    return report


def check_lagrangian_symmetry(Y: VectorField, sys: LagrangianSystem, sampler: BoxSampler,
                              tol: Tolerance | None = None) -> SymmetryReport:
    """Symmetry of L (tau(Y) = 0, Y(L) = 0) and extended symmetry (Y(L) = (dY^z/dz) L)."""
    tol = tol or Tolerance()
    c = sys.chart

    def row(x):
        Lj = sys.jet(x, 1)
        y = Y(x)
        y_l = float(Lj.grad @ y)
        zeta_prime = float(Y.jacobian(x)[c.z, c.z])
        return {
            LAGRANGIAN_SYMMETRY: [(float(y[0]), 0.0), (y_l, 0.0)],
            EXTENDED_SYMMETRY: [(y_l - zeta_prime * Lj.value, max(abs(y_l), abs(zeta_prime * Lj.value)))],
        }

    rows = sample_residuals(sampler, sys, row)
    report = SymmetryReport(Y.label, sys.name, sampler.seed, len(rows), tol)
    for name in (LAGRANGIAN_SYMMETRY, EXTENDED_SYMMETRY):
        report.verdicts[name] = reduce_rows(name, rows, tol)
    return report


# ---------------------------------------------------------------------------
# Legendre transform to the Hamiltonian side
# ---------------------------------------------------------------------------

class LegendreHamiltonian:
    """H(t, q, p, z) = E_L(t, q, v*, z) with v* the Newton inverse of dL/dv = p.

    Jets are exact to order 2: the derivatives of v* follow from the implicit
    function theorem applied to dL/dv(t, q, v*, z) = p.
    """

    def __init__(self, sys: LagrangianSystem, guess: Callable[[np.ndarray], np.ndarray] | None = None):
        self.sys = sys
        self.guess = guess
        self._warm = threading.local()

    def solve_velocity(self, y: np.ndarray) -> np.ndarray:
        warm = getattr(self._warm, "v", None)
        cold = self.guess(y) if self.guess is not None else None
        try:
            x = legendre_inverse(self.sys, y, cold if warm is None else warm)
        except NewtonNoConvergence:
            if warm is None:
                raise
            log.debug("Warm-started Legendre inverse failed at %s; retrying cold", y.tolist())
            x = legendre_inverse(self.sys, y, cold)
        self._warm.v = x[self.sys.chart.fiber].copy()
        return x

    def jet(self, y, order: int) -> Jet:
        y = coords(y)
        c = self.sys.chart
        x = self.solve_velocity(y)
        Lj = self.sys.jet(x, 2)
        v = x[c.fiber]
        p = y[c.fiber]
        value = float(p @ v) - Lj.value
        if order == 0:
            return Jet.constant(value, c.d)
        grad = -Lj.grad.copy()
        grad[c.fiber] = v
        if order == 1:
            return Jet(value, grad, None, 1)
        hs = Lj.hess
        W_inv = np.linalg.inv(hs[c.fiber, c.fiber])
        dv = -W_inv @ hs[c.fiber]
        dv[:, c.fiber] = W_inv
        dx = np.eye(c.d)
        dx[c.fiber] = dv
        hess = -hs @ dx
        hess[c.fiber] = dv
        hess = 0.5 * (hess + hess.T)
        return Jet(value, grad, hess, 2)

    def __call__(self, y) -> float:
        return self.jet(y, 0).value


def to_hamiltonian(sys: LagrangianSystem, guess: Callable[[np.ndarray], np.ndarray] | None = None) -> HamiltonianSystem:
    chart = ChartSpec(sys.chart.n, HAMILTONIAN)
    return HamiltonianSystem(chart, LegendreHamiltonian(sys, guess), sys.params, f"{sys.name}-legendre", sys.exclude)


def legendre_pushforward_residual(sys: LagrangianSystem, ham: HamiltonianSystem, point) -> float:
    """max |FL_* Gamma_L - X_H o FL| at a point."""
    x = coords(point)
    c = sys.chart
    Lj = sys.jet(x, 2)
    D = np.eye(c.d)
    D[c.fiber] = Lj.hess[c.fiber]
    pushed = D @ herglotz_field(sys, x)
    return float(np.max(np.abs(pushed - ham.field(legendre_map(sys, x)))))
