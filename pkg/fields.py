"""
Scalar and vector fields on a chart.

A scalar field is anything with `jet(x, order) -> Jet` and `__call__(x) -> float`.
A vector field returns its components at a point and, on request, its Jacobian
or a directional derivative J(x) w. Fields whose components are scalar fields
supporting jets differentiate exactly ("ad2"); everything else falls back to
central differences ("fd").
"""

import logging
from typing import Callable, Iterable, Mapping, Protocol, Sequence

import numpy as np

from ad_core import Jet, as_jet, directional_derivative_fd, jacobian_fd, lift_point
from errors import DependenceError
from expr import Expr, eval_jet, evaluate, free_variables, parse, to_text

log = logging.getLogger(__name__)

AD2 = "ad2"
FD = "fd"


class ScalarField(Protocol):
    def jet(self, x: np.ndarray, order: int) -> Jet: ...

    def __call__(self, x: np.ndarray) -> float: ...


class ExprField:
    """A parsed expression with its parameter values bound."""

    def __init__(self, expr: Expr, chart, params: Mapping[str, float] | None = None):
        self.expr = expr
        self.chart = chart
        self.params = dict(params or {})

    @classmethod
    def parse(cls, source: str, chart, params: Mapping[str, float] | None = None) -> "ExprField":
        params = dict(params or {})
        return cls(parse(source, chart, params.keys()), chart, params)

    @property
    def text(self) -> str:
        return to_text(self.expr)

    def jet(self, x, order: int) -> Jet:
        return eval_jet(self.expr, x, self.params, order, self.chart)

    def __call__(self, x) -> float:
        return evaluate(self.expr, dict(zip(self.chart.names, np.asarray(x, dtype=float))), self.params)

    def __repr__(self) -> str:
        return f"ExprField({self.text})"


class FunctionField:
    """A native callable over lifted coordinate jets, e.g. `lambda x: x[2]**2 / 2 + x[3]`."""

    def __init__(self, fn: Callable[[list[Jet]], Jet | float], dim: int, label: str = ""):
        self.fn = fn
        self.dim = dim
        self.label = label or getattr(fn, "__name__", "function")

    def jet(self, x, order: int) -> Jet:
        return as_jet(self.fn(lift_point(x, order)), self.dim)

    def __call__(self, x) -> float:
        return self.jet(x, 0).value

    def __repr__(self) -> str:
        return f"FunctionField({self.label})"


class JetField:
    """A field defined directly by a jet-producing function `(x, order) -> Jet`."""

    def __init__(self, jet_fn: Callable[[np.ndarray, int], Jet], label: str = ""):
        self.jet_fn = jet_fn
        self.label = label

    def jet(self, x, order: int) -> Jet:
        return self.jet_fn(np.asarray(x, dtype=float), order)

    def __call__(self, x) -> float:
        return self.jet(x, 0).value

    def __repr__(self) -> str:
        return f"JetField({self.label})"


class ConstantField:
    def __init__(self, value: float, dim: int):
        self.value = float(value)
        self.dim = dim

    def jet(self, x, order: int) -> Jet:
        return Jet.constant(self.value, self.dim)

    def __call__(self, x) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"ConstantField({self.value!r})"


def check_dependence(field: ScalarField, allowed: Iterable[str], chart, x=None, label: str = "field") -> None:
    """Raise DependenceError if `field` depends on chart coordinates outside `allowed`.

    Expression fields are checked through their free variables; other fields
    through the gradient at `x`.
    """
    allowed = set(allowed)
    if isinstance(field, ExprField):
        extra = free_variables(field.expr) - allowed
        if extra:
            raise DependenceError(f"{label} may only depend on {sorted(allowed)}, but mentions {sorted(extra)}")
        return
    if x is None:
        return
    grad = field.jet(x, 1).grad
    for k, name in enumerate(chart.names):
        if name not in allowed and grad[k] != 0.0:
            raise DependenceError(f"{label} may only depend on {sorted(allowed)}, but varies with {name}")


# ---------------------------------------------------------------------------
# Vector fields
# ---------------------------------------------------------------------------

class VectorField:
    """Base class; subclasses provide __call__ and may override the derivatives."""

    differentiability = FD
    label = "Y"

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x) -> np.ndarray:
        return jacobian_fd(self, np.asarray(x, dtype=float))

    def directional(self, x, w) -> np.ndarray:
        """J(x) @ w."""
        return directional_derivative_fd(self, np.asarray(x, dtype=float), w)


class ComponentField(VectorField):
    """One scalar field per chart coordinate (the VectorFieldSpec of the classifier)."""

    def __init__(self, components: Sequence[ScalarField], differentiability: str = AD2, label: str = "Y"):
        if differentiability not in (AD2, FD):
            raise ValueError(f"differentiability must be '{AD2}' or '{FD}', got '{differentiability}'")
        self.components = tuple(components)
        self.differentiability = differentiability
        self.label = label

    @classmethod
    def parse(cls, source: str, chart, params: Mapping[str, float] | None = None,
              differentiability: str = AD2, label: str = "Y") -> "ComponentField":
        """Build from semicolon-separated component expressions in chart order."""
        parts = [part.strip() for part in source.split(";")]
        if len(parts) != chart.d:
            raise ValueError(f"Expected {chart.d} components ({', '.join(chart.names)}), got {len(parts)}")
        return cls([ExprField.parse(part, chart, params) for part in parts], differentiability, label)

    @property
    def dim(self) -> int:
        return len(self.components)

    def with_differentiability(self, differentiability: str) -> "ComponentField":
        return ComponentField(self.components, differentiability, self.label)

    def component_jets(self, x, order: int = 1) -> list[Jet]:
        return [c.jet(x, order) for c in self.components]

    def __call__(self, x) -> np.ndarray:
        return np.array([c(x) for c in self.components], dtype=float)

    def jacobian(self, x) -> np.ndarray:
        if self.differentiability == FD:
            return super().jacobian(x)
        return np.vstack([j.grad for j in self.component_jets(x, 1)])

    def directional(self, x, w) -> np.ndarray:
        if self.differentiability == FD:
            return super().directional(x, w)
        return self.jacobian(x) @ np.asarray(w, dtype=float)

    def __repr__(self) -> str:
        return f"ComponentField({self.label}, {self.differentiability})"


class MapField(VectorField):
    """A vector field given as a native map x -> components; always differentiated by FD."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], label: str = "Y",
                 jacobian_fn: Callable[[np.ndarray], np.ndarray] | None = None):
        self.fn = fn
        self.label = label
        self.jacobian_fn = jacobian_fn
        if jacobian_fn is not None:
            self.differentiability = AD2

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x) -> np.ndarray:
        if self.jacobian_fn is not None:
            return np.asarray(self.jacobian_fn(np.asarray(x, dtype=float)), dtype=float)
        return super().jacobian(x)

    def directional(self, x, w) -> np.ndarray:
        if self.jacobian_fn is not None:
            return self.jacobian(x) @ np.asarray(w, dtype=float)
        return super().directional(x, w)

    def __repr__(self) -> str:
        return f"MapField({self.label})"


def vector_derivative(Y: VectorField, x, f: ScalarField) -> float:
    """Y(f) at x."""
    return float(f.jet(x, 1).grad @ Y(x))
