import numpy as np
import pytest

import catalog
from errors import DenominatorVanishes
from fields import ComponentField, ExprField
from hamiltonian import (CONSERVED, DISSIPATED, HamiltonianSystem, NoetherField, combine_quantities,
                         energy_rate_residual, field_equation_residuals, hamiltonian_vector_field, jacobi_bracket,
                         jacobi_bracket_structural, lie_derivative_quantity, quantity_from_symmetry, quantity_residual)
from phase_space import ChartSpec
from symmetry import GENERALIZED, PASS, check_quantity, lie_bracket

H1 = ChartSpec(1)
H2 = ChartSpec(2)
HAMILTONIAN_EXAMPLES = ["free_particle_tdm", "r4_linear", "cartan_counterexample", "h_preserving_counterexample"]


def _points(entry, count=100, seed=0):
    return catalog.sampler_for(entry, count=count, seed=seed).points()


def test_darboux_field():
    sys = HamiltonianSystem(H1, ExprField.parse("p1^2/2 + z", H1))
    np.testing.assert_allclose(hamiltonian_vector_field(sys, [0.0, 0.3, 2.0, 0.5]), [1.0, 2.0, -2.0, 1.5])


@pytest.mark.parametrize("name", HAMILTONIAN_EXAMPLES)
def test_field_equations_hold(name):
    entry = catalog.build_example(name)
    for x in _points(entry):
        assert field_equation_residuals(entry.system, x).max_abs < 1e-12


def test_constant_hamiltonian_has_no_residual():
    sys = HamiltonianSystem(H1, ExprField.parse("2", H1))
    assert field_equation_residuals(sys, [0.1, 0.2, 0.3, 0.4]).max_abs == 0.0


def test_perturbed_field_is_detected():
    sys = HamiltonianSystem(H1, ExprField.parse("p1^2/2 + z", H1))
    x = np.array([0.0, 0.3, 2.0, 0.5])
    wrong = sys.field(x) + H1.unit("p1")
    r = field_equation_residuals(sys, x, wrong)
    assert abs(r.r1[H1.index("q1")]) == pytest.approx(1.0)


@pytest.mark.parametrize("name", HAMILTONIAN_EXAMPLES)
def test_energy_rate(name):
    entry = catalog.build_example(name)
    for x in _points(entry, 30):
        assert abs(energy_rate_residual(entry.system, x)) < 1e-12


def test_bracket_with_one_is_reeb_derivative():
    f = ExprField.parse("z^2", H1)
    one = ExprField.parse("1", H1)
    x = [0.0, 0.0, 0.0, 2.0]
    assert jacobi_bracket(f, one, H1, x) == pytest.approx(4.0)
    assert jacobi_bracket_structural(f, one, H1, x) == pytest.approx(4.0)


def test_bracket_antisymmetry_and_formula_agreement(rng):
    f = ExprField.parse("q1^2*p2 - 3*z*p1 + t*q2 + z^3", H2)
    g = ExprField.parse("p1^2/2 + p2*q1 - z*q2^2 + t^2*p1", H2)
    for _ in range(100):
        x = rng.uniform(-2, 2, size=H2.d)
        fg, gf = jacobi_bracket(f, g, H2, x), jacobi_bracket(g, f, H2, x)
        assert abs(fg + gf) < 1e-10
        assert jacobi_bracket_structural(f, g, H2, x) == pytest.approx(fg, abs=1e-10)


@pytest.mark.parametrize("name, quantity", [
    ("free_particle_tdm", "f"),
    ("free_particle_tdm", "p"),
    ("r4_linear", "p"),
    ("cartan_counterexample", "H"),
    ("h_preserving_counterexample", "p"),
])
def test_bracket_with_energy(name, quantity):
    entry = catalog.build_example(name)
    sys = entry.system
    f = entry.quantity(quantity).field
    for x in _points(entry):
        fj = f.jet(x, 1)
        expanded = -(fj.grad @ sys.field(x)) - sys.dissipation_rate(x) * fj.value + fj.grad[0]
        assert abs(jacobi_bracket_structural(f, sys.H, sys.chart, x) - expanded) < 1e-10
        # dissipated quantities satisfy {f, H} = R_t(f)
        assert jacobi_bracket(f, sys.H, sys.chart, x) == pytest.approx(fj.grad[0], abs=1e-10)


def test_registered_quantities_pass_pointwise(free_particle, r4, cartan_example, h_preserving):
    for entry in (free_particle, r4, cartan_example, h_preserving):
        for q in entry.quantities:
            sys = entry.system_for(q.system)
            for x in catalog.sampler_for(entry, q.system, count=30).points():
                assert abs(quantity_residual(q.field, sys, q.kind, x)) < 1e-10


def test_momentum_is_not_conserved_under_friction(r4):
    p = r4.quantity("p").field
    assert abs(quantity_residual(p, r4.system, CONSERVED, [0.0, 0.0, 1.0, 0.0])) == pytest.approx(1.0)


def test_quotient_of_dissipated_is_conserved(free_particle):
    f = free_particle.quantity("f").field
    p = free_particle.quantity("p").field
    g = combine_quantities("quotient", [(p, DISSIPATED), (f, DISSIPATED)])
    assert g.expected_kind == CONSERVED
    for x in _points(free_particle, 30):
        assert abs(quantity_residual(g, free_particle.system, CONSERVED, x)) < 1e-10


def test_product_and_linear_combinations(free_particle):
    sys = free_particle.system
    f = free_particle.quantity("f").field
    p = free_particle.quantity("p").field
    conserved = combine_quantities("quotient", [(p, DISSIPATED), (f, DISSIPATED)])
    product = combine_quantities("product", [(f, DISSIPATED), (conserved, CONSERVED)])
    linear = combine_quantities("linear", [(f, DISSIPATED), (p, DISSIPATED)], coeffs=(2.0, -3.0))
    shifted = combine_quantities("linear", [(conserved, CONSERVED)], coeffs=(1.5,), constant=4.0)
    assert (product.expected_kind, linear.expected_kind, shifted.expected_kind) == (DISSIPATED, DISSIPATED, CONSERVED)
    for x in _points(free_particle, 30):
        assert abs(quantity_residual(product, sys, DISSIPATED, x)) < 1e-10
        assert abs(quantity_residual(linear, sys, DISSIPATED, x)) < 1e-10
        assert abs(quantity_residual(shifted, sys, CONSERVED, x)) < 1e-10


def test_combination_rules_are_enforced(free_particle):
    f = free_particle.quantity("f").field
    with pytest.raises(ValueError):
        combine_quantities("linear", [(f, DISSIPATED)], coeffs=(1.0,), constant=1.0)
    with pytest.raises(ValueError):
        combine_quantities("quotient", [(f, DISSIPATED), (f, CONSERVED)])


def test_quotient_denominator_vanishes(free_particle):
    f = free_particle.quantity("f").field
    p = free_particle.quantity("p").field
    g = combine_quantities("quotient", [(f, DISSIPATED), (p, DISSIPATED)])
    with pytest.raises(DenominatorVanishes):
        g.jet(np.array([0.5, 0.0, 0.0, 0.0]), 1)


def test_noether_round_trip(free_particle):
    sys = free_particle.system
    f = free_particle.quantity("f").field
    Y = NoetherField(f, sys)
    back = quantity_from_symmetry(Y, sys)
    for x in _points(free_particle, 50):
        assert Y(x)[0] == 0.0
        assert abs(back(x) - f(x)) < 1e-12
        assert abs(sys.frame(x).eta @ lie_bracket(Y, sys, x)) < 1e-8


def test_lie_derivative_of_conserved_quantity(h_preserving):
    sys = h_preserving.system
    Y = ComponentField.parse("0; 1; 0; 0", sys.chart)
    g = ExprField.parse("q1 - t*p1", sys.chart)
    Yg = lie_derivative_quantity(Y, g)
    for x in _points(h_preserving, 20):
        assert abs(quantity_residual(g, sys, CONSERVED, x)) < 1e-12
        assert Yg(x) == pytest.approx(1.0)
        assert abs(quantity_residual(Yg, sys, CONSERVED, x)) < 1e-12


def test_generalized_symmetries_yield_dissipated_quantities():
    for name in HAMILTONIAN_EXAMPLES:
        entry = catalog.build_example(name)
        for sym in entry.symmetries:
            if sym.system != catalog.PRIMARY or sym.expected.get(GENERALIZED) != PASS:
                continue
            f = quantity_from_symmetry(sym.target, entry.system)
            report = check_quantity(f, entry.system, catalog.sampler_for(entry, count=40), DISSIPATED)
            assert report.verdict(DISSIPATED) == PASS, f"{name}/{sym.name}"
