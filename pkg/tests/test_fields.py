import numpy as np
import pytest

from errors import DependenceError
from fields import (AD2, FD, ComponentField, ConstantField, ExprField, FunctionField, MapField, check_dependence,
                    vector_derivative)
from phase_space import ChartSpec

H1 = ChartSpec(1)


def test_expr_field_binds_params():
    f = ExprField.parse("k*q1^2", H1, {"k": 3.0})
    x = [0.0, 2.0, 0.0, 0.0]
    assert f(x) == 12.0
    assert f.jet(x, 1).grad[1] == 12.0


def test_function_field_over_lifted_jets():
    f = FunctionField(lambda c: c[2] ** 2 / 2 + c[3], 4)
    j = f.jet([0.0, 0.0, 3.0, 1.0], 2)
    assert j.value == 5.5
    np.testing.assert_allclose(j.grad, [0.0, 0.0, 3.0, 1.0])
    assert j.hess[2, 2] == 1.0


def test_constant_field():
    c = ConstantField(2.5, 4)
    assert c([1, 2, 3, 4]) == 2.5
    assert not np.any(c.jet([1, 2, 3, 4], 2).grad)


def test_component_count_must_match_chart():
    with pytest.raises(ValueError):
        ComponentField.parse("0; 1; 0", H1)


def test_ad_and_fd_jacobians_agree(rng):
    Y = ComponentField.parse("0; q1*p1; sin(z) + p1^2; exp(q1)*t", H1)
    assert Y.differentiability == AD2
    Y_fd = Y.with_differentiability(FD)
    for _ in range(10):
        x = rng.uniform(-1, 1, size=4)
        np.testing.assert_allclose(Y.jacobian(x), Y_fd.jacobian(x), atol=1e-7)
        w = rng.normal(size=4)
        np.testing.assert_allclose(Y.directional(x, w), Y_fd.directional(x, w), atol=1e-7)


def test_map_field_falls_back_to_fd():
    Y = MapField(lambda x: np.array([0.0, x[2], -x[1], x[1] * x[2]]))
    J = Y.jacobian(np.array([0.0, 1.0, 2.0, 0.0]))
    np.testing.assert_allclose(J[3], [0.0, 2.0, 1.0, 0.0], atol=1e-9)


def test_check_dependence():
    check_dependence(ExprField.parse("q1^2", H1), ("q1",), H1)
    with pytest.raises(DependenceError):
        check_dependence(ExprField.parse("q1*p1", H1), ("q1",), H1)
    native = FunctionField(lambda c: c[1] * c[3], 4)
    with pytest.raises(DependenceError):
        check_dependence(native, ("q1",), H1, np.array([0.0, 1.0, 1.0, 1.0]))


def test_vector_derivative():
    Y = ComponentField.parse("0; 1; 0; 0", H1)
    f = ExprField.parse("q1^3", H1)
    assert vector_derivative(Y, [0.0, 2.0, 0.0, 0.0], f) == 12.0
