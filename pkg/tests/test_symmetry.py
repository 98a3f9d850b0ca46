import numpy as np
import pytest

import catalog
from errors import JacobianSingular, SampleDomainError
from fields import FD, ComponentField, ConstantField, ExprField
from hamiltonian import CONSERVED, DISSIPATED, Tolerance
from symmetry import (CARTAN, CARTAN_QUANTITY, CONFORMAL_HAMILTONIAN, DYNAMICAL, FAIL, GENERALIZED,
                      NOT_APPLICABLE, PASS, REDUCED_GENERALIZED, STRICT_HAMILTONIAN, BoxSampler, BracketField,
                      CartanWitness, ClassVerdict, DiffeoSpec, SymmetryReport, check_cartan, check_diffeomorphism,
                      check_quantity, classify_infinitesimal, default_box, enforce_inclusions, lie_bracket,
                      lie_derivative_eta, transport_quantity)

REGISTERED = [(entry_name, sym.name)
              for entry_name in catalog.EXAMPLE_NAMES
              for sym in catalog.build_example(entry_name).symmetries]


@pytest.mark.parametrize("entry_name, sym_name", REGISTERED)
def test_registered_verdicts(entry_name, sym_name):
    entry = catalog.build_example(entry_name)
    sym = entry.symmetry(sym_name)
    sampler = catalog.sampler_for(entry, sym.system, count=40)
    verdicts = catalog.check_registered(entry, sym, sampler)
    assert {k: verdicts.get(k) for k in sym.expected} == sym.expected


def test_reports_carry_sampling_metadata(r4):
    sampler = catalog.sampler_for(r4, count=25, seed=7)
    report = classify_infinitesimal(r4.symmetry("Y").target, r4.system, sampler)
    doc = report.to_dict()
    assert doc["samples"] == 25
    assert doc["seed"] == 7
    assert all(c["seed"] == 7 and c["samples"] == 25 for c in doc["classes"])
    assert {c["class"] for c in doc["classes"]} >= {GENERALIZED, DYNAMICAL, STRICT_HAMILTONIAN}


def test_classification_is_deterministic(r4):
    Z = r4.symmetry("Z").target
    first = classify_infinitesimal(Z, r4.system, catalog.sampler_for(r4, count=20)).to_dict()
    second = classify_infinitesimal(Z, r4.system, catalog.sampler_for(r4, count=20)).to_dict()
    assert first == second


def test_inclusion_promotes_weaker_class(caplog):
    report = SymmetryReport("Y", "sys", 0, 1, Tolerance())
    report.verdicts[STRICT_HAMILTONIAN] = ClassVerdict(STRICT_HAMILTONIAN, PASS, 0.0, 1)
    report.verdicts[CONFORMAL_HAMILTONIAN] = ClassVerdict(CONFORMAL_HAMILTONIAN, FAIL, 1e-7, 1)
    report.verdicts[GENERALIZED] = ClassVerdict(GENERALIZED, FAIL, 1e-7, 1)
    enforce_inclusions(report)
    assert report.verdict(CONFORMAL_HAMILTONIAN) == PASS
    assert report.verdict(GENERALIZED) == PASS
    assert report.verdicts[GENERALIZED].note == f"implied by {CONFORMAL_HAMILTONIAN}; own check failed with max residual 1e-07"
    assert report.verdicts[GENERALIZED].max_residual == 1e-7
    assert report.verdicts[GENERALIZED].to_dict(0)["note"].endswith("1e-07")
    assert "promoting generalized" in caplog.text


def test_check_quantity(r4):
    sampler = catalog.sampler_for(r4, count=30)
    p = r4.quantity("p").field
    assert check_quantity(p, r4.system, sampler, DISSIPATED).verdict(DISSIPATED) == PASS
    assert check_quantity(p, r4.system, sampler, CONSERVED).verdict(CONSERVED) == FAIL
    with pytest.raises(ValueError):
        check_quantity(p, r4.system, sampler, "preserved")


def test_lie_bracket_with_dynamics(h_preserving):
    sys = h_preserving.system
    d_q = ComponentField.parse("0; 1; 0; 0", sys.chart)
    d_p = ComponentField.parse("0; 0; 1; 0", sys.chart)
    x = np.array([0.3, -0.4, 0.7, 1.1])
    np.testing.assert_allclose(lie_bracket(d_q, sys, x), 0.0, atol=1e-14)
    np.testing.assert_allclose(lie_bracket(d_p, sys, x), [0.0, 1.0, 0.0, 0.7], atol=1e-14)
    np.testing.assert_allclose(BracketField(d_p, sys)(x), [0.0, 1.0, 0.0, 0.7], atol=1e-14)


def test_cartan_quantity_and_reduced_field(cartan_example):
    sys = cartan_example.system
    sampler = catalog.sampler_for(cartan_example, count=30)
    Y2 = cartan_example.symmetry("Y2")
    result = check_cartan(Y2.target, Y2.witness, sys, sampler)
    assert result.report.verdict(CARTAN) == PASS
    assert result.report.verdict(CARTAN_QUANTITY) == PASS
    assert result.report.verdict(REDUCED_GENERALIZED) == PASS
    H = cartan_example.quantity("H").field
    for x in sampler.points():
        assert result.quantity(x) == pytest.approx(H(x), rel=1e-12)

    Y1 = cartan_example.symmetry("Y1")
    result = check_cartan(Y1.target, Y1.witness, sys, sampler)
    for x in sampler.points()[:5]:
        assert abs(result.quantity(x)) < 1e-14


def test_cartan_failure_marks_derived_checks_not_applicable(r4):
    zero = ConstantField(0.0, r4.system.chart.d)
    result = check_cartan(r4.symmetry("Y").target, CartanWitness(zero, zero), r4.system,
                          catalog.sampler_for(r4, count=20))
    assert result.report.verdict(CARTAN) == FAIL
    assert result.report.verdict(CARTAN_QUANTITY) == NOT_APPLICABLE
    assert result.report.verdict(REDUCED_GENERALIZED) == NOT_APPLICABLE
    assert result.quantity is None and result.reduced_field is None


def _map(text, chart, label):
    return DiffeoSpec.from_components([ExprField.parse(c, chart) for c in text.split(";")], label=label)


def test_translation_map_is_strict_and_dynamical(h_preserving):
    sys = h_preserving.system
    phi = _map("t; q1 + 1; p1; z", sys.chart, "shift_q")
    sampler = catalog.sampler_for(h_preserving, count=20)
    for kind in ("dynamical", "generalized", "conformal-cocontactomorphism", "strict-hamiltonian"):
        assert check_diffeomorphism(phi, sys, sampler, kind).verdict(kind) == PASS


def test_scaling_z_reports_conformal_factor(h_preserving):
    sys = h_preserving.system
    phi = _map("t; q1; 2*p1; 2*z", sys.chart, "scale")
    report = check_diffeomorphism(phi, sys, catalog.sampler_for(h_preserving, count=20),
                                  "conformal-cocontactomorphism")
    verdict = report.verdicts["conformal-cocontactomorphism"]
    assert verdict.verdict == PASS
    assert verdict.rho_estimate == pytest.approx((2.0, 2.0))


def test_singular_map_raises(h_preserving):
    sys = h_preserving.system
    phi = _map("t; q1; 0*p1; z", sys.chart, "collapse")
    with pytest.raises(JacobianSingular):
        check_diffeomorphism(phi, sys, catalog.sampler_for(h_preserving, count=5), "generalized")
    with pytest.raises(ValueError):
        check_diffeomorphism(phi, sys, catalog.sampler_for(h_preserving, count=5), "canonical")


def test_transport_quantity(r4):
    phi = r4.symmetry("Phi_2p").target
    g = transport_quantity(r4.quantity("p").field, phi)
    x = np.array([0.1, 0.2, 0.3, 0.4])
    jet = g.jet(x, 1)
    assert jet.value == pytest.approx(0.6)
    np.testing.assert_allclose(jet.grad, [0.0, 0.0, 2.0, 0.0])


def test_sampler_validation():
    assert default_box(catalog.build_example("r4_linear").system.chart, 3.0) == [(-3.0, 3.0)] * 4
    with pytest.raises(ValueError):
        BoxSampler([(1.0, 0.0)])
    with pytest.raises(ValueError):
        BoxSampler([(0.0, 1.0)], count=0)
    with pytest.raises(SampleDomainError):
        BoxSampler([(0.0, 1.0)], count=3, exclude=lambda x: True).points()


def test_lie_derivative_of_eta(r4, cartan_example, rng):
    chart = r4.system.chart
    d_p = ComponentField.parse("0; 0; 1; 0", chart)
    d_z = ComponentField.parse("0; 0; 0; 1", chart)
    Y2 = cartan_example.symmetry("Y2").target
    for _ in range(10):
        x = rng.uniform(-2, 2, size=4)
        np.testing.assert_allclose(lie_derivative_eta(d_p, chart, x), [0.0, -1.0, 0.0, 0.0], atol=1e-14)
        np.testing.assert_allclose(lie_derivative_eta(d_z, r4.system, x), 0.0, atol=1e-14)
        _, q, p, z = x
        E = np.exp(q - z)
        eta = np.array([0.0, -p, 0.0, 1.0])
        np.testing.assert_allclose(lie_derivative_eta(Y2, cartan_example.system, x), E * eta, rtol=1e-12, atol=1e-12)


def test_lie_brackets_of_fields(r4, cartan_example, rng):
    Y, Z = r4.symmetry("Y").target, r4.symmetry("Z").target
    Y1, Y2 = cartan_example.symmetry("Y1").target, cartan_example.symmetry("Y2").target
    for _ in range(10):
        x = rng.uniform(-2, 2, size=4)
        np.testing.assert_allclose(lie_bracket(Y, Z, x), [0.0, 0.0, 0.5, 1.0], atol=1e-14)
        np.testing.assert_allclose(lie_bracket(Z, Z, x), 0.0, atol=1e-14)
        np.testing.assert_allclose(lie_bracket(Y1, Y2, x), -x[1] * Y2(x), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("entry_name, sym_name", [
    ("r4_linear", "Y"),
    ("r4_linear", "Z"),
    ("h_preserving_counterexample", "z d/dz"),
])
def test_ad_and_fd_classifications_agree(entry_name, sym_name):
    entry = catalog.build_example(entry_name)
    Y = entry.symmetry(sym_name).target
    sampler = catalog.sampler_for(entry, count=20)
    exact = classify_infinitesimal(Y, entry.system, sampler)
    approx = classify_infinitesimal(Y.with_differentiability(FD), entry.system, sampler)
    for name, verdict in exact.verdicts.items():
        assert approx.verdict(name) == verdict.verdict, name
        assert abs(approx.verdicts[name].max_residual - verdict.max_residual) < 1e-5, name


def test_dynamical_symmetries_close_under_the_bracket(r4):
    sampler = catalog.sampler_for(r4, count=20)
    d_q = ComponentField.parse("0; 1; 0; 0", r4.system.chart, label="d/dq")
    Z = r4.symmetry("Z").target
    for field in (d_q, Z, BracketField(d_q, Z)):
        assert classify_infinitesimal(field, r4.system, sampler).verdict(DYNAMICAL) == PASS, field.label
