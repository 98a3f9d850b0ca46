"""
Time integration of X_H and Gamma_L flows.

t is the curve parameter (tau(X) = 1), so the integrated state is the d-1
coordinates after t. Two methods: classical RK4 with a fixed step, and the
Dormand-Prince embedded 4(5) pair with a PI step-size controller.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

import config
from errors import StepFailure
from fields import ScalarField
from hamiltonian import CONSERVED, DISSIPATED, QUANTITY_KINDS, Tolerance, quantity_terms
from phase_space import ChartSpec, coords

log = logging.getLogger(__name__)

RK4 = "rk4"
ADAPTIVE45 = "adaptive45"
METHODS = (RK4, ADAPTIVE45)

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

# PI controller exponents for a 5th-order step
_ALPHA = 0.17
_BETA = 0.04


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = RK4
    step: float = config.RK4_STEP
    rtol: float = config.ADAPTIVE_RTOL
    atol: float = config.ADAPTIVE_ATOL
    max_steps: int = config.MAX_STEPS
    stride: int = 1
    initial_step: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"Unknown method '{self.method}' (expected {' or '.join(METHODS)})")
        if self.step <= 0 or self.rtol <= 0 or self.atol <= 0:
            raise ValueError("step and tolerances must be positive")
        if self.stride < 1 or self.max_steps < 1:
            raise ValueError("stride and max_steps must be positive")

    def describe(self) -> dict:
        if self.method == RK4:
            return {"method": self.method, "step": self.step, "stride": self.stride}
        return {"method": self.method, "rtol": self.rtol, "atol": self.atol, "stride": self.stride}


@dataclass
class Trajectory:
    chart: ChartSpec
    t: np.ndarray
    states: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def points(self) -> np.ndarray:
        """Full chart coordinates, one row per sample."""
        return np.column_stack([self.t, self.states])

    def point(self, k: int) -> np.ndarray:
        return np.concatenate(([self.t[k]], self.states[k]))

    @property
    def final(self) -> np.ndarray:
        return self.point(-1)


def _rhs(system):
    def f(t: float, state: np.ndarray) -> np.ndarray:
        return system.field(np.concatenate(([t], state)))[1:]
    return f


def _rk4(f, t0: float, t1: float, y0: np.ndarray, cfg: IntegratorConfig):
    n_steps = max(1, math.ceil((t1 - t0) / cfg.step - 1e-9))
    if n_steps > cfg.max_steps:
        raise StepFailure(f"{n_steps} RK4 steps needed, max_steps is {cfg.max_steps}")
    h = (t1 - t0) / n_steps
    ts, ys = [t0], [y0]
    y = y0
    for k in range(1, n_steps + 1):
        t = t0 + (k - 1) * h
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % cfg.stride == 0 or k == n_steps:
            ts.append(t0 + k * h)
            ys.append(y)
    return ts, ys, {"steps": n_steps, "rejected": 0, "evaluations": 4 * n_steps}


def _error_norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray, cfg: IntegratorConfig) -> float:
    scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f, t0, y0, f0, t1, cfg) -> float:
    if cfg.initial_step is not None:
        return min(cfg.initial_step, t1 - t0)
    scale = cfg.atol + cfg.rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h, t1 - t0)


def _adaptive45(f, t0: float, t1: float, y0: np.ndarray, cfg: IntegratorConfig):
    t, y = t0, y0
    k_first = f(t, y)
    h = _initial_step(f, t0, y0, k_first, t1, cfg)
    err_prev = 1e-4
    ts, ys = [t0], [y0]
    accepted = rejected = evaluations = 0
    evaluations += 1
    while t < t1:
        if accepted + rejected >= cfg.max_steps:
            raise StepFailure(f"adaptive integration exceeded {cfg.max_steps} steps at t={t:.6g}")
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepFailure(f"step size underflow at t={t:.6g} (h={h:.3g})")
        last = t + h >= t1
        if last:
            h = t1 - t
        ks = [k_first]
        for stage in range(1, 7):
            y_stage = y + h * sum(a * k for a, k in zip(_A[stage], ks))
            ks.append(f(t + _C[stage] * h, y_stage))
        evaluations += 6
        K = np.array(ks)
        y_new = y + h * (_B5 @ K)
        err = _error_norm(h * (_E @ K), y, y_new, cfg)
        if err <= 1.0:
            t = t1 if last else t + h
            y = y_new
            k_first = ks[6]
            accepted += 1
            if accepted % cfg.stride == 0 or t >= t1:
                ts.append(t)
                ys.append(y)
            if err == 0.0:
                factor = config.STEP_MAX_FACTOR
            else:
                factor = config.STEP_SAFETY * err ** -_ALPHA * err_prev ** _BETA
            err_prev = max(err, 1e-4)
            h *= min(config.STEP_MAX_FACTOR, max(config.STEP_MIN_FACTOR, factor))
        else:
            rejected += 1
            h *= max(config.STEP_MIN_FACTOR, config.STEP_SAFETY * err ** -0.2)
    return ts, ys, {"steps": accepted, "rejected": rejected, "evaluations": evaluations}


def integrate(system, initial, t_span: tuple[float, float], cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the system's dynamics from `initial` over `t_span`.

    The t coordinate of `initial` is replaced by t_span[0].
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError(f"t_span must be increasing, got {t_span}")
    x0 = coords(initial).copy()
    if x0.shape != (system.chart.d,):
        raise ValueError(f"initial point needs {system.chart.d} coordinates, got {x0.shape}")
    f = _rhs(system)
    runner = _rk4 if cfg.method == RK4 else _adaptive45
    ts, ys, stats = runner(f, t0, t1, x0[1:], cfg)
    log.info("Integrated %s over [%g, %g] with %s: %d step(s), %d rejected",
             system.name, t0, t1, cfg.method, stats["steps"], stats["rejected"])
    metadata = {"system": system.name, "t_span": [t0, t1], **cfg.describe(), **stats}
    return Trajectory(system.chart, np.array(ts), np.array(ys), metadata)


def integrate_many(system, initials: Sequence, t_span: tuple[float, float], cfg: IntegratorConfig | None = None,
                   workers: int = config.INTEGRATION_WORKERS) -> list[Trajectory]:
    """Integrate several initial conditions concurrently; results keep input order."""
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda x0: integrate(system, x0, t_span, cfg), initials))


# ---------------------------------------------------------------------------
# Along-trajectory checks
# ---------------------------------------------------------------------------

def monitor(traj: Trajectory, observables: Mapping[str, ScalarField]) -> dict[str, np.ndarray]:
    points = traj.points
    return {name: np.array([f(x) for x in points]) for name, f in observables.items()}


def time_derivative(t: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """d/dt of sampled values at interior samples via local quartic interpolation.

    Returns (indices, derivatives); the two samples at each end are skipped.
    Fourth-order accurate on uniform and non-uniform grids alike.
    """
    values = np.asarray(values, dtype=float)
    if t.shape[0] < 5:
        raise ValueError("at least five samples are needed for a time derivative")
    indices = np.arange(2, t.shape[0] - 2)
    out = []
    for k in indices:
        window = t[k - 2:k + 3] - t[k]
        h = float(np.max(np.abs(window)))
        coeffs = np.polynomial.polynomial.polyfit(window / h, values[k - 2:k + 3], 4)
        out.append(coeffs[1] / h)
    return indices, np.array(out)


@dataclass
class AlongReport:
    quantity: str
    kind: str
    samples: int
    max_differential_residual: float
    max_relative_deviation: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "kind": self.kind,
            "samples": self.samples,
            "max_differential_residual": self.max_differential_residual,
            "max_relative_deviation": self.max_relative_deviation,
            "tolerance": self.tolerance,
            "verdict": "pass" if self.passed else "fail",
        }


def verify_dissipation_along(traj: Trajectory, f: ScalarField, system, kind: str = DISSIPATED,
                             tol: float = 1e-6, label: str = "f") -> AlongReport:
    """Check the pointwise law and the integral law f(t) = f(0) exp(-int R_z(E) dt) along `traj`.

    The integral uses the cumulative trapezoid rule, so its error is O(h^2) in
    the sample spacing; for constant rates it is exact.
    """
    if kind not in QUANTITY_KINDS:
        raise ValueError(f"Unknown quantity kind '{kind}'")
    points = traj.points
    residual_tol = Tolerance()
    values = np.empty(len(points))
    worst_diff = 0.0
    diff_ok = True
    for k, x in enumerate(points):
        values[k] = f(x)
        residual, scale = quantity_terms(f, system, kind, x)
        worst_diff = max(worst_diff, abs(residual))
        diff_ok = diff_ok and abs(residual) <= max(residual_tol.bound(scale), tol * scale)

    if kind == CONSERVED:
        predicted = np.full_like(values, values[0])
    else:
        rates = np.array([system.dissipation_rate(x) for x in points])
        integral = np.concatenate(([0.0], np.cumsum(0.5 * (rates[1:] + rates[:-1]) * np.diff(traj.t))))
        predicted = values[0] * np.exp(-integral)
    gap = np.abs(values - predicted)
    denom = np.maximum(np.abs(predicted), residual_tol.atol)
    deviation = float(np.max(np.where(gap == 0.0, 0.0, gap / denom)))
    passed = diff_ok and deviation <= tol
    log.info("Along-trajectory %s check of %s: max relative deviation %.3g (%s)",
             kind, label, deviation, "pass" if passed else "fail")
    return AlongReport(label, kind, len(points), worst_diff, deviation, tol, passed)


@dataclass(frozen=True)
class HerglotzResiduals:
    momentum: float
    action: float

    @property
    def max_abs(self) -> float:
        return max(self.momentum, self.action)


def herglotz_residuals_along(traj: Trajectory, sys) -> HerglotzResiduals:
    """max |d/dt L_v - L_q - L_z L_v| and max |dz/dt - L| over interior samples."""
    c = sys.chart
    points = traj.points
    jets = [sys.jet(x, 1) for x in points]
    momenta = np.array([j.grad[c.fiber] for j in jets])
    indices, dp = time_derivative(traj.t, momenta)
    _, dz = time_derivative(traj.t, points[:, c.z])
    momentum = 0.0
    action = 0.0
    for row, k in enumerate(indices):
        g = jets[k].grad
        force = g[c.q] + g[c.z] * g[c.fiber]
        momentum = max(momentum, float(np.max(np.abs(dp[row] - force))))
        action = max(action, abs(float(dz[row]) - jets[k].value))
    return HerglotzResiduals(momentum, action)


def balance_residual_along(traj: Trajectory, f: ScalarField, rate: ScalarField) -> float:
    """max |d/dt f - rate| over interior samples (e.g. mechanical energy against friction power)."""
    points = traj.points
    indices, df = time_derivative(traj.t, np.array([f(x) for x in points]))
    return float(max(abs(df[row] - rate(points[k])) for row, k in enumerate(indices)))
