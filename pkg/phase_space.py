"""
Darboux-coordinate geometry of the canonical cocontact manifold R x T*Q x R.

Charts are ordered (t, q1..qn, p1..pn, z) on Hamiltonian charts and
(t, q1..qn, v1..vn, z) on Lagrangian ones. In Darboux coordinates

    tau = dt,   eta = dz - p_i dq^i,   d eta = -dp_i ^ dq^i,

and the Reeb fields are R_t = d/dt and R_z = d/dz.

`CocontactFrame` holds the same structure at a single point as plain arrays.
It is how the rest of the engine treats Hamiltonian charts and the eta_L
structure of Lagrangian charts uniformly.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from errors import ChartKindError

HAMILTONIAN = "hamiltonian"
LAGRANGIAN = "lagrangian"

# Components in the coordinate basis d/dt, d/dq.., d/dp.. (or d/dv..), d/dz.
TangentVector = NDArray[np.float64]
# Components in the dual basis dt, dq.., dp.. (or dv..), dz.
CoVector = NDArray[np.float64]


@dataclass(frozen=True)
class ChartSpec:
    n: int
    kind: str = HAMILTONIAN

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"A chart needs at least one degree of freedom, got n={self.n}")
        if self.kind not in (HAMILTONIAN, LAGRANGIAN):
            raise ChartKindError(f"Unknown chart kind '{self.kind}'")

    @property
    def d(self) -> int:
        return 2 * self.n + 2

    @property
    def fiber_letter(self) -> str:
        return "p" if self.kind == HAMILTONIAN else "v"

    @property
    def names(self) -> tuple[str, ...]:
        q = tuple(f"q{i}" for i in range(1, self.n + 1))
        f = tuple(f"{self.fiber_letter}{i}" for i in range(1, self.n + 1))
        return ("t",) + q + f + ("z",)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @property
    def t(self) -> int:
        return 0

    @property
    def q(self) -> slice:
        return slice(1, self.n + 1)

    @property
    def fiber(self) -> slice:
        return slice(self.n + 1, 2 * self.n + 1)

    @property
    def z(self) -> int:
        return 2 * self.n + 1

    def unit(self, name: str) -> TangentVector:
        e = np.zeros(self.d)
        e[self.index(name)] = 1.0
        return e

    def require(self, kind: str) -> None:
        if self.kind != kind:
            raise ChartKindError(f"Operation needs a {kind} chart, got a {self.kind} chart")


@dataclass(frozen=True)
class PhasePoint:
    t: float
    q: tuple[float, ...]
    p_or_v: tuple[float, ...]
    z: float

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.t, *self.q, *self.p_or_v, self.z], dtype=float)

    @classmethod
    def from_array(cls, chart: ChartSpec, x: Sequence[float]) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        if x.shape != (chart.d,):
            raise ValueError(f"Expected {chart.d} coordinates, got shape {x.shape}")
        return cls(float(x[0]), tuple(x[chart.q].tolist()), tuple(x[chart.fiber].tolist()), float(x[chart.z]))


def coords(point) -> NDArray[np.float64]:
    """Coordinates of a PhasePoint or array-like as a float array."""
    if isinstance(point, PhasePoint):
        return point.as_array()
    return np.asarray(point, dtype=float)


# ---------------------------------------------------------------------------
# Darboux forms
# ---------------------------------------------------------------------------

def tau_pair(V: TangentVector) -> float:
    return float(V[0])


def eta_pair(chart: ChartSpec, point, V: TangentVector) -> float:
    chart.require(HAMILTONIAN)
    x = coords(point)
    return float(V[chart.z] - x[chart.fiber] @ V[chart.q])


def deta_pair(chart: ChartSpec, U: TangentVector, V: TangentVector) -> float:
    chart.require(HAMILTONIAN)
    return float(U[chart.q] @ V[chart.fiber] - U[chart.fiber] @ V[chart.q])


def tau_covector(chart: ChartSpec) -> CoVector:
    return chart.unit("t")


def eta_covector(chart: ChartSpec, point) -> CoVector:
    chart.require(HAMILTONIAN)
    x = coords(point)
    eta = np.zeros(chart.d)
    eta[chart.q] = -x[chart.fiber]
    eta[chart.z] = 1.0
    return eta


def deta_matrix(chart: ChartSpec) -> NDArray[np.float64]:
    """Matrix of d eta: d eta(U, V) = U @ M @ V."""
    chart.require(HAMILTONIAN)
    omega = np.zeros((chart.d, chart.d))
    for i in range(chart.n):
        omega[1 + i, chart.n + 1 + i] = 1.0
        omega[chart.n + 1 + i, 1 + i] = -1.0
    return omega


def flat(chart: ChartSpec, point, V: TangentVector) -> CoVector:
    """(tau(V)) tau + i_V d eta + (eta(V)) eta, in closed form."""
    chart.require(HAMILTONIAN)
    x = coords(point)
    V = np.asarray(V, dtype=float)
    p = x[chart.fiber]
    eta_v = eta_pair(chart, x, V)
    alpha = np.empty(chart.d)
    alpha[0] = V[0]
    alpha[chart.q] = -V[chart.fiber] - p * eta_v
    alpha[chart.fiber] = V[chart.q]
    alpha[chart.z] = eta_v
    return alpha


def flat_inv(chart: ChartSpec, point, alpha: CoVector) -> TangentVector:
    chart.require(HAMILTONIAN)
    x = coords(point)
    alpha = np.asarray(alpha, dtype=float)
    p = x[chart.fiber]
    V = np.empty(chart.d)
    V[0] = alpha[0]
    V[chart.q] = alpha[chart.fiber]
    V[chart.fiber] = -alpha[chart.q] - p * alpha[chart.z]
    V[chart.z] = alpha[chart.z] + p @ alpha[chart.fiber]
    return V


def reeb_t(chart: ChartSpec) -> TangentVector:
    return chart.unit("t")


def reeb_z(chart: ChartSpec) -> TangentVector:
    return chart.unit("z")


# ---------------------------------------------------------------------------
# Pointwise frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CocontactFrame:
    """tau, eta and d eta at one point, with eta = dz - theta_i dq^i.

    `theta_grads` row i is the gradient of theta_i; it is what d(eta(Y)) needs
    beyond the Jacobian of Y.
    """

    chart: ChartSpec
    tau: CoVector
    eta: CoVector
    deta: NDArray[np.float64]
    theta_grads: NDArray[np.float64]

    @property
    def flat_matrix(self) -> NDArray[np.float64]:
        return np.outer(self.tau, self.tau) + self.deta.T + np.outer(self.eta, self.eta)

    def flat(self, V: TangentVector) -> CoVector:
        return self.flat_matrix @ V

    def flat_inv(self, alpha: CoVector) -> TangentVector:
        return np.linalg.solve(self.flat_matrix, alpha)

    @property
    def reeb_t(self) -> TangentVector:
        return self.flat_inv(self.tau)

    @property
    def reeb_z(self) -> TangentVector:
        return self.flat_inv(self.eta)

    def deta_pair(self, U: TangentVector, V: TangentVector) -> float:
        return float(U @ self.deta @ V)

    def interior_deta(self, V: TangentVector) -> CoVector:
        """i_V d eta."""
        return self.deta.T @ V

    def hamiltonian_field(self, df: CoVector, f: float) -> TangentVector:
        """X_f solving flat(X_f) = df - (R_z(f) + f) eta + (1 - R_t(f)) tau."""
        rz_f = float(df @ self.reeb_z)
        rt_f = float(df @ self.reeb_t)
        return self.flat_inv(df - (rz_f + f) * self.eta + (1.0 - rt_f) * self.tau)

    def eta_lie_derivative(self, Y: TangentVector, jacobian_y: NDArray[np.float64]) -> CoVector:
        """L_Y eta = i_Y d eta + d(eta(Y)) from Y and its Jacobian at this point."""
        d_eta_y = jacobian_y.T @ self.eta - self.theta_grads.T @ Y[self.chart.q]
        return self.interior_deta(Y) + d_eta_y

    def jacobi_bracket(self, df: CoVector, f: float, dg: CoVector, g: float) -> float:
        """-d eta(flat^-1 df, flat^-1 dg) - f R_z(g) + g R_z(f)."""
        rz = self.reeb_z
        return (-self.deta_pair(self.flat_inv(df), self.flat_inv(dg))
                - f * float(dg @ rz) + g * float(df @ rz))


def darboux_frame(chart: ChartSpec, point) -> CocontactFrame:
    chart.require(HAMILTONIAN)
    theta_grads = np.zeros((chart.n, chart.d))
    for i in range(chart.n):
        theta_grads[i, chart.n + 1 + i] = 1.0
    return CocontactFrame(chart, tau_covector(chart), eta_covector(chart, point), deta_matrix(chart), theta_grads)
