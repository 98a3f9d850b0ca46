import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import catalog  # noqa: E402
from expr import Binary, Call, Const, Unary, Var  # noqa: E402
from phase_space import ChartSpec  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def free_particle():
    return catalog.build_example("free_particle_tdm")


@pytest.fixture(scope="session")
def r4():
    return catalog.build_example("r4_linear")


@pytest.fixture(scope="session")
def cartan_example():
    return catalog.build_example("cartan_counterexample")


@pytest.fixture(scope="session")
def h_preserving():
    return catalog.build_example("h_preserving_counterexample")


@pytest.fixture(scope="session")
def central():
    return catalog.build_example("central_potential_tdm")


@pytest.fixture(scope="session")
def two_body():
    return catalog.build_example("two_body_friction")


def random_smooth_expr(rng: np.random.Generator, names, depth: int = 3):
    """Random AST that is smooth and defined on the whole of R^d."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return Var(names[rng.integers(len(names))])
        return Const(round(float(rng.uniform(-2.0, 2.0)), 3))

    def sub():
        return random_smooth_expr(rng, names, depth - 1)

    kind = int(rng.integers(13))
    if kind < 3:
        return Binary("+-*"[kind], sub(), sub())
    if kind == 3:
        s = sub()
        return Binary("/", sub(), Binary("+", Const(2.5), Binary("*", s, s)))
    if kind in (4, 5):
        return Call(("sin", "cos")[kind - 4], sub())
    if kind == 6:
        return Call("exp", Call("sin", sub()))
    if kind == 7:
        s = sub()
        return Call("ln", Binary("+", Const(1.5), Binary("*", s, s)))
    if kind == 8:
        s = sub()
        return Call("sqrt", Binary("+", Const(1.0), Binary("*", s, s)))
    if kind == 9:
        return Binary("^", random_smooth_expr(rng, names, min(depth - 1, 1)), Const(float(rng.integers(2, 4))))
    if kind == 10:
        return Binary("^", Binary("+", Const(2.0), Call("sin", sub())), Call("cos", sub()))
    if kind == 11:
        return Call("tan", Binary("*", Const(0.5), Call("sin", sub())))
    return Unary("neg", sub())


@pytest.fixture
def smooth_expressions():
    """1000 (expression, point) pairs on a one-dof Hamiltonian chart, seeded."""
    chart = ChartSpec(1)
    gen = np.random.default_rng(2024)
    return chart, [(random_smooth_expr(gen, chart.names), gen.uniform(-1.0, 1.0, size=chart.d))
                   for _ in range(1000)]
