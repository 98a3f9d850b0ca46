"""
Order-2 forward-mode differentiation over phase-space coordinates.

A Jet carries the value of a scalar field together with its gradient and
Hessian with respect to the d chart coordinates (t, q.., p.. or v.., z). Jets
combine through the elementary operations of `jet_apply`, which apply the
exact chain rule truncated at the jet order. Python operators are overloaded so
native callables can be written as ordinary arithmetic on lifted coordinates.

For derivatives the jets cannot reach (third derivatives of a Lagrangian, or
Jacobians of maps given only as black boxes) `directional_derivative_fd` gives a
Richardson-extrapolated central difference.
"""

import math
import warnings
from typing import Callable, Sequence

import numpy as np

from errors import DomainError, NonSmoothWarning

OPS = ("add", "sub", "mul", "div", "pow", "neg", "exp", "ln", "sin", "cos", "tan", "sqrt", "abs")


class Jet:
    """Value, gradient and Hessian of a scalar field at one point.

    `hess` is materialised lazily: jets of order < 2 store no Hessian and report
    a zero matrix.
    """

    __slots__ = ("value", "grad", "_hess", "order", "nonsmooth")

    def __init__(self, value: float, grad: np.ndarray, hess: np.ndarray | None = None,
                 order: int = 2, nonsmooth: bool = False):
        self.value = float(value)
        self.grad = grad
        self._hess = hess if order >= 2 else None
        self.order = order
        self.nonsmooth = nonsmooth

    @classmethod
    def constant(cls, value: float, dim: int) -> "Jet":
        return cls(value, np.zeros(dim), None, 0)

    @property
    def dim(self) -> int:
        return self.grad.shape[0]

    @property
    def hess(self) -> np.ndarray:
        if self._hess is None:
            return np.zeros((self.dim, self.dim))
        return self._hess

    def __repr__(self) -> str:
        return f"Jet(value={self.value!r}, grad={self.grad.tolist()!r}, order={self.order})"

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet.constant(float(other), self.dim)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else jet_apply("add", self, other)

    def __radd__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else jet_apply("add", other, self)

    def __sub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else jet_apply("sub", self, other)

    def __rsub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else jet_apply("sub", other, self)

    def __mul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else jet_apply("mul", self, other)

    def __rmul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else jet_apply("mul", other, self)

    def __truediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else jet_apply("div", self, other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else jet_apply("div", other, self)

    def __pow__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else jet_apply("pow", self, other)

    def __rpow__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else jet_apply("pow", other, self)

    def __neg__(self):
        return jet_apply("neg", self)

    def __pos__(self):
        return self

    def __abs__(self):
        return jet_apply("abs", self)


# ---------------------------------------------------------------------------
# Seeding
# ---------------------------------------------------------------------------

def lift_point(point: Sequence[float], order: int = 2) -> list[Jet]:
    """Return one coordinate jet per entry of `point` (unit gradients when order >= 1)."""
    x = np.asarray(point, dtype=float)
    d = x.shape[0]
    eye = np.eye(d)
    jets = []
    for k in range(d):
        grad = eye[k].copy() if order >= 1 else np.zeros(d)
        hess = np.zeros((d, d)) if order >= 2 else None
        jets.append(Jet(x[k], grad, hess, order))
    return jets


def as_jet(value, dim: int) -> Jet:
    """Coerce a float or Jet to a Jet of dimension `dim`."""
    if isinstance(value, Jet):
        return value
    return Jet.constant(float(value), dim)


# ---------------------------------------------------------------------------
# Elementary operations
# ---------------------------------------------------------------------------

def _unary(a: Jet, g: float, g1: float, g2: float, nonsmooth: bool = False) -> Jet:
    """Chain rule for a scalar function with derivatives (g, g', g'') at a.value."""
    order = a.order
    grad = g1 * a.grad if order >= 1 else np.zeros(a.dim)
    hess = None
    if order >= 2:
        hess = g2 * np.outer(a.grad, a.grad)
        if a._hess is not None:
            hess = hess + g1 * a._hess
    return Jet(g, grad, hess, order, a.nonsmooth or nonsmooth)


def _derivs(op: str, u: float, order: int) -> tuple[float, float, float]:
    if op == "neg":
        return -u, -1.0, 0.0
    if op == "exp":
        e = math.exp(u)
        return e, e, e
    if op == "ln":
        if u <= 0.0:
            raise DomainError(f"ln of non-positive value {u!r}")
        return math.log(u), 1.0 / u, -1.0 / (u * u)
    if op == "sin":
        s, c = math.sin(u), math.cos(u)
        return s, c, -s
    if op == "cos":
        s, c = math.sin(u), math.cos(u)
        return c, -s, -c
    if op == "tan":
        if math.cos(u) == 0.0:
            raise DomainError(f"tan is undefined at {u!r}")
        t = math.tan(u)
        return t, 1.0 + t * t, 2.0 * t * (1.0 + t * t)
    if op == "sqrt":
        if u < 0.0:
            raise DomainError(f"sqrt of negative value {u!r}")
        if u == 0.0:
            if order >= 1:
                raise DomainError("sqrt is not differentiable at 0")
            return 0.0, 0.0, 0.0
        s = math.sqrt(u)
        return s, 0.5 / s, -0.25 / (s * u)
    if op == "recip":
        if u == 0.0:
            raise DomainError("division by zero")
        r = 1.0 / u
        return r, -r * r, 2.0 * r * r * r
    raise ValueError(f"Unknown unary operation '{op}'")


def _pow_const(a: Jet, c: float, order: int) -> tuple[float, float, float]:
    u = a.value
    if c == 0.0:
        return 1.0, 0.0, 0.0
    if u < 0.0 and not float(c).is_integer():
        raise DomainError(f"negative base {u!r} raised to non-integer power {c!r}")
    if u == 0.0 and c < 0.0:
        raise DomainError(f"0 raised to negative power {c!r}")
    try:
        g = u ** c
        g1 = c * u ** (c - 1.0) if order >= 1 else 0.0
        g2 = c * (c - 1.0) * u ** (c - 2.0) if order >= 2 and c != 1.0 else 0.0
    except ZeroDivisionError as exc:
        raise DomainError(f"derivative of x^{c!r} is unbounded at 0") from exc
    return g, g1, g2


def _is_constant(a: Jet) -> bool:
    return a.order == 0 or (not np.any(a.grad) and (a._hess is None or not np.any(a._hess)))


def jet_apply(op: str, *args: Jet) -> Jet:
    """Apply elementary operation `op` to jets with the exact truncated chain rule."""
    if op in ("add", "sub", "mul", "div", "pow"):
        if len(args) != 2:
            raise ValueError(f"'{op}' takes two arguments, got {len(args)}")
        a, b = args
        if a.dim != b.dim:
            raise ValueError(f"Jet dimensions differ: {a.dim} vs {b.dim}")
        order = max(a.order, b.order)
        nonsmooth = a.nonsmooth or b.nonsmooth

        if op in ("add", "sub"):
            sign = 1.0 if op == "add" else -1.0
            hess = None
            if order >= 2:
                hess = a.hess + sign * b.hess
            return Jet(a.value + sign * b.value, a.grad + sign * b.grad, hess, order, nonsmooth)

        if op == "mul":
            grad = a.value * b.grad + b.value * a.grad
            hess = None
            if order >= 2:
                hess = (a.value * b.hess + b.value * a.hess) + (np.outer(a.grad, b.grad) + np.outer(b.grad, a.grad))
            return Jet(a.value * b.value, grad, hess, order, nonsmooth)

        if op == "div":
            return jet_apply("mul", a, _unary(b, *_derivs("recip", b.value, b.order)))

        # pow
        if _is_constant(b):
            g, g1, g2 = _pow_const(a, b.value, a.order)
            result = _unary(a, g, g1, g2)
            result.nonsmooth = nonsmooth
            return result
        if a.value <= 0.0:
            raise DomainError(f"non-positive base {a.value!r} raised to a varying power")
        return jet_apply("exp", jet_apply("mul", b, jet_apply("ln", a)))

    if len(args) != 1:
        raise ValueError(f"'{op}' takes one argument, got {len(args)}")
    (a,) = args
    if op == "abs":
        if a.value == 0.0:
            warnings.warn("abs differentiated at 0; using subgradient 0", NonSmoothWarning, stacklevel=2)
            return _unary(a, 0.0, 0.0, 0.0, nonsmooth=True)
        return _unary(a, abs(a.value), math.copysign(1.0, a.value), 0.0)
    return _unary(a, *_derivs(op, a.value, a.order))


def exp(a): return jet_apply("exp", a) if isinstance(a, Jet) else math.exp(a)
def ln(a): return jet_apply("ln", a) if isinstance(a, Jet) else float_op("ln", a)
def sin(a): return jet_apply("sin", a) if isinstance(a, Jet) else math.sin(a)
def cos(a): return jet_apply("cos", a) if isinstance(a, Jet) else math.cos(a)
def tan(a): return jet_apply("tan", a) if isinstance(a, Jet) else float_op("tan", a)
def sqrt(a): return jet_apply("sqrt", a) if isinstance(a, Jet) else float_op("sqrt", a)


def float_op(op: str, u: float) -> float:
    return _derivs(op, float(u), 0)[0]


# ---------------------------------------------------------------------------
# Finite-difference fallback
# ---------------------------------------------------------------------------

def default_step(point: np.ndarray) -> float:
    scale = float(np.max(np.abs(point))) if point.size else 0.0
    return np.cbrt(np.finfo(float).eps) * max(1.0, scale)


def directional_derivative_fd(fn: Callable[[np.ndarray], np.ndarray], point: Sequence[float],
                              direction: Sequence[float], h: float = 0.0) -> np.ndarray:
    """Central difference of `fn` along `direction` with one Richardson step.

    Combines the estimates at h and h/2 as (4 D_{h/2} - D_h) / 3.
    """
    x = np.asarray(point, dtype=float)
    w = np.asarray(direction, dtype=float)
    if h <= 0.0:
        h = default_step(x)
    if not np.any(w):
        return np.zeros_like(np.atleast_1d(np.asarray(fn(x), dtype=float)))

    def central(step: float) -> np.ndarray:
        forward = np.atleast_1d(np.asarray(fn(x + step * w), dtype=float))
        backward = np.atleast_1d(np.asarray(fn(x - step * w), dtype=float))
        return (forward - backward) / (2.0 * step)

    coarse = central(h)
    fine = central(h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def jacobian_fd(fn: Callable[[np.ndarray], np.ndarray], point: Sequence[float], h: float = 0.0) -> np.ndarray:
    """Full m x d Jacobian of `fn`, one directional difference per column."""
    x = np.asarray(point, dtype=float)
    eye = np.eye(x.shape[0])
    columns = [directional_derivative_fd(fn, x, eye[k], h) for k in range(x.shape[0])]
    return np.column_stack(columns)
