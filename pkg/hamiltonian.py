"""
Cocontact Hamiltonian engine.

In Darboux coordinates the Hamiltonian vector field of H is

    X_H = d/dt + H_p d/dq - (H_q + p H_z) d/dp + (p H_p - H) d/dz

and f is dissipated when X_H(f) = -R_z(H) f, conserved when X_H(f) = 0.

Systems here and in `lagrangian` share one small interface that the symmetry
classifier and the integrator rely on: `frame(x)`, `energy_jet(x, order)`,
`field(x)`, `field_directional(x, w)` and `dissipation_rate(x)` (R_z of the
energy).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

import config
from ad_core import Jet
from errors import DenominatorVanishes
from fields import AD2, FD, JetField, ScalarField, VectorField
from phase_space import HAMILTONIAN, ChartSpec, CocontactFrame, coords, darboux_frame

log = logging.getLogger(__name__)

DISSIPATED = "dissipated"
CONSERVED = "conserved"
QUANTITY_KINDS = (DISSIPATED, CONSERVED)


@dataclass(frozen=True)
class Tolerance:
    """Pass when |residual| <= atol + rtol * scale."""

    atol: float = config.RESIDUAL_ATOL
    rtol: float = config.RESIDUAL_RTOL

    def bound(self, scale: float = 0.0) -> float:
        return self.atol + self.rtol * abs(scale)

    def passes(self, residual: float, scale: float = 0.0) -> bool:
        return abs(residual) <= self.bound(scale)

    @classmethod
    def absolute(cls, value: float) -> "Tolerance":
        return cls(atol=value, rtol=0.0)


class HamiltonianSystem:
    kind = HAMILTONIAN

    def __init__(self, chart: ChartSpec, H: ScalarField, params: Mapping[str, float] | None = None,
                 name: str = "", exclude: Callable[[np.ndarray], bool] | None = None):
        chart.require(HAMILTONIAN)
        self.chart = chart
        self.H = H
        self.params = dict(params or {})
        self.name = name or "hamiltonian"
        self.exclude = exclude

    def __repr__(self) -> str:
        return f"HamiltonianSystem({self.name}, n={self.chart.n})"

    def frame(self, x) -> CocontactFrame:
        return darboux_frame(self.chart, x)

    def energy_jet(self, x, order: int = 1) -> Jet:
        return self.H.jet(coords(x), order)

    def dissipation_rate(self, x) -> float:
        """R_z(H)."""
        return float(self.energy_jet(x, 1).grad[self.chart.z])

    def field(self, x) -> np.ndarray:
        return hamiltonian_vector_field(self, x)

    def field_jacobian(self, x) -> np.ndarray:
        return contact_field_jacobian(self.chart, coords(x), self.energy_jet(x, 2))

    def field_directional(self, x, w) -> np.ndarray:
        return self.field_jacobian(x) @ np.asarray(w, dtype=float)


# ---------------------------------------------------------------------------
# Hamiltonian vector fields
# ---------------------------------------------------------------------------

def contact_vector_field(chart: ChartSpec, x: np.ndarray, jet: Jet) -> np.ndarray:
    """Darboux components of X_f from an order >= 1 jet of f."""
    x = coords(x)
    g = jet.grad
    p = x[chart.fiber]
    X = np.empty(chart.d)
    X[0] = 1.0
    X[chart.q] = g[chart.fiber]
    X[chart.fiber] = -(g[chart.q] + p * g[chart.z])
    X[chart.z] = p @ g[chart.fiber] - jet.value
    return X


def contact_field_jacobian(chart: ChartSpec, x: np.ndarray, jet: Jet) -> np.ndarray:
    """Exact Jacobian of X_f from an order-2 jet of f."""
    x = coords(x)
    g, hs = jet.grad, jet.hess
    n = chart.n
    p = x[chart.fiber]
    J = np.zeros((chart.d, chart.d))
    J[chart.q] = hs[chart.fiber]
    J[chart.fiber] = -hs[chart.q] - np.outer(p, hs[chart.z])
    for i in range(n):
        J[n + 1 + i, n + 1 + i] -= g[chart.z]
    J[chart.z] = p @ hs[chart.fiber] - g
    J[chart.z, chart.fiber] += g[chart.fiber]
    return J


def hamiltonian_vector_field(sys: HamiltonianSystem, point) -> np.ndarray:
    x = coords(point)
    return contact_vector_field(sys.chart, x, sys.energy_jet(x, 1))


@dataclass(frozen=True)
class FieldEquationResiduals:
    r1: np.ndarray
    r2: float
    r3: float

    @property
    def max_abs(self) -> float:
        return max(float(np.max(np.abs(self.r1))), abs(self.r2), abs(self.r3))


def field_equation_residuals(sys, point, field: np.ndarray | None = None) -> FieldEquationResiduals:
    """Residuals of i_X d eta = dE - R_z(E) eta - R_t(E) tau, eta(X) = -E, tau(X) = 1.

    `field` defaults to the system's own dynamics; pass another vector to test it.
    """
    x = coords(point)
    frame = sys.frame(x)
    X = sys.field(x) if field is None else np.asarray(field, dtype=float)
    E = sys.energy_jet(x, 1)
    rz_e = float(E.grad @ frame.reeb_z)
    rt_e = float(E.grad @ frame.reeb_t)
    r1 = frame.interior_deta(X) - (E.grad - rz_e * frame.eta - rt_e * frame.tau)
    r2 = float(frame.eta @ X) + E.value
    r3 = float(frame.tau @ X) - 1.0
    return FieldEquationResiduals(r1, r2, r3)


def energy_rate_residual(sys, point) -> float:
    """X(E) + R_z(E) E - R_t(E), which vanishes for every system."""
    x = coords(point)
    frame = sys.frame(x)
    E = sys.energy_jet(x, 1)
    return float(E.grad @ sys.field(x) + (E.grad @ frame.reeb_z) * E.value - E.grad @ frame.reeb_t)


# ---------------------------------------------------------------------------
# Jacobi bracket
# ---------------------------------------------------------------------------

def jacobi_bracket(f: ScalarField, g: ScalarField, chart: ChartSpec, point) -> float:
    """{f, g} = -X_g(f) - R_z(g) f + R_t(f) in Darboux coordinates."""
    x = coords(point)
    fj, gj = f.jet(x, 1), g.jet(x, 1)
    X_g = contact_vector_field(chart, x, gj)
    return float(-(fj.grad @ X_g) - gj.grad[chart.z] * fj.value + fj.grad[chart.t])


def jacobi_bracket_structural(f: ScalarField, g: ScalarField, chart: ChartSpec, point) -> float:
    """{f, g} = -d eta(flat^-1 df, flat^-1 dg) - f R_z(g) + g R_z(f)."""
    x = coords(point)
    fj, gj = f.jet(x, 1), g.jet(x, 1)
    return darboux_frame(chart, x).jacobi_bracket(fj.grad, fj.value, gj.grad, gj.value)


# ---------------------------------------------------------------------------
# Quantities
# ---------------------------------------------------------------------------

def quantity_terms(f: ScalarField, sys, kind: str, point) -> tuple[float, float]:
    """Residual of the dissipated/conserved law at a point, and the magnitude scale of its terms."""
    if kind not in QUANTITY_KINDS:
        raise ValueError(f"Unknown quantity kind '{kind}'")
    x = coords(point)
    fj = f.jet(x, 1)
    flow = float(fj.grad @ sys.field(x))
    if kind == CONSERVED:
        return flow, abs(flow)
    decay = sys.dissipation_rate(x) * fj.value
    return flow + decay, max(abs(flow), abs(decay))


def quantity_residual(f: ScalarField, sys, kind: str, point) -> float:
    """dissipated: X(f) + R_z(E) f; conserved: X(f)."""
    return quantity_terms(f, sys, kind, point)[0]


class CombinedQuantity(JetField):
    """A quantity built from others, carrying the kind the combination rules predict."""

    def __init__(self, jet_fn, expected_kind: str, label: str):
        super().__init__(jet_fn, label)
        self.expected_kind = expected_kind


def combine_quantities(op: str, inputs: Sequence[tuple[ScalarField, str]],
                       coeffs: Sequence[float] = (), constant: float = 0.0) -> CombinedQuantity:
    """Combine quantities: quotient f1/f2, product f1*f2, or linear sum(a_i f_i) + a0.

    Expected kinds:
      quotient(dissipated, dissipated)  -> conserved
      product(dissipated, conserved)    -> dissipated
      product(conserved, conserved)     -> conserved
      linear of dissipated (a0 = 0)     -> dissipated
      linear of conserved, any a0       -> conserved
    """
    fields = [f for f, _ in inputs]
    kinds = [k for _, k in inputs]
    log.debug("Combining %s of (%s)", op, ", ".join(kinds))
    if op == "quotient":
        if kinds != [DISSIPATED, DISSIPATED]:
            raise ValueError("quotient needs exactly two dissipated quantities")
        num, den = fields

        def jet_fn(x, order):
            d = den.jet(x, order)
            if abs(d.value) < config.DENOMINATOR_FLOOR:
                raise DenominatorVanishes(f"denominator is {d.value!r} at {x.tolist()}")
            return num.jet(x, order) / d

        return CombinedQuantity(jet_fn, CONSERVED, "quotient")

    if op == "product":
        if len(fields) != 2:
            raise ValueError("product needs exactly two quantities")
        if sorted(kinds) == [CONSERVED, DISSIPATED]:
            expected = DISSIPATED
        elif kinds == [CONSERVED, CONSERVED]:
            expected = CONSERVED
        else:
            raise ValueError("product is only defined for (dissipated, conserved) or (conserved, conserved)")
        a, b = fields
        return CombinedQuantity(lambda x, order: a.jet(x, order) * b.jet(x, order), expected, "product")

    if op == "linear":
        if len(coeffs) != len(fields) or not fields:
            raise ValueError("linear needs one coefficient per input")
        if all(k == DISSIPATED for k in kinds):
            if constant != 0.0:
                raise ValueError("a constant term does not preserve dissipation")
            expected = DISSIPATED
        elif all(k == CONSERVED for k in kinds):
            expected = CONSERVED
        else:
            raise ValueError("linear combinations must not mix dissipated and conserved quantities")

        def jet_fn(x, order):
            total = None
            for a, f in zip(coeffs, fields):
                term = f.jet(x, order) * float(a)
                total = term if total is None else total + term
            return total + constant

        return CombinedQuantity(jet_fn, expected, "linear")

    raise ValueError(f"Unknown combination '{op}'")


def lie_derivative_quantity(Y: VectorField, f: ScalarField) -> JetField:
    """Y(f) as a field with order <= 1 jets (needs the order-2 jet of f)."""

    def jet_fn(x, order):
        fj = f.jet(x, 2)
        y = Y(x)
        value = float(fj.grad @ y)
        if order == 0:
            return Jet.constant(value, x.shape[0])
        grad = Y.jacobian(x).T @ fj.grad + fj.hess @ y
        return Jet(value, grad, None, 1)

    return JetField(jet_fn, f"{Y.label}(f)")


# ---------------------------------------------------------------------------
# Noether correspondence
# ---------------------------------------------------------------------------

class NoetherField(VectorField):
    """Y = X_f - R_t for a dissipated quantity f of `sys`."""

    def __init__(self, f: ScalarField, sys, label: str = "Y_f"):
        self.f = f
        self.sys = sys
        self.label = label
        self.differentiability = AD2 if sys.chart.kind == HAMILTONIAN else FD

    def __call__(self, x) -> np.ndarray:
        x = coords(x)
        chart = self.sys.chart
        if chart.kind == HAMILTONIAN:
            Y = contact_vector_field(chart, x, self.f.jet(x, 1))
            Y[0] = 0.0
            return Y
        frame = self.sys.frame(x)
        fj = self.f.jet(x, 1)
        return frame.hamiltonian_field(fj.grad, fj.value) - frame.reeb_t

    def jacobian(self, x) -> np.ndarray:
        if self.sys.chart.kind == HAMILTONIAN:
            return contact_field_jacobian(self.sys.chart, coords(x), self.f.jet(coords(x), 2))
        return super().jacobian(x)

    def directional(self, x, w) -> np.ndarray:
        if self.sys.chart.kind == HAMILTONIAN:
            return self.jacobian(x) @ np.asarray(w, dtype=float)
        return super().directional(x, w)


def symmetry_from_dissipated(f: ScalarField, sys) -> NoetherField:
    return NoetherField(f, sys)


def eta_of_field_jet(Y: VectorField, sys, x: np.ndarray, order: int) -> Jet:
    """eta(Y) with its gradient d(eta(Y)) = J_Y^T eta - theta_grads^T Y_q."""
    frame = sys.frame(x)
    y = Y(x)
    value = float(frame.eta @ y)
    if order == 0:
        return Jet.constant(value, x.shape[0])
    grad = Y.jacobian(x).T @ frame.eta - frame.theta_grads.T @ y[sys.chart.q]
    return Jet(value, grad, None, 1)


def quantity_from_symmetry(Y: VectorField, sys) -> JetField:
    """f = -eta(Y)."""
    return JetField(lambda x, order: -eta_of_field_jet(Y, sys, x, min(order, 1)), f"-eta({Y.label})")
