import numpy as np
import pytest

from errors import ExprSyntaxError, ParamSchemaError, SystemFileError
from hamiltonian import DISSIPATED
from symmetry import DYNAMICAL, GENERALIZED, PASS, BoxSampler, classify_infinitesimal
from system_file import load_system_file, parse_box, parse_system_text, read_pairs

DAMPED = """
# free particle with friction
kind = hamiltonian
n = 1
expression = p1^2/2 + kappa*z
param.kappa = 1
box = 0:2, -2:2, -2:2, -2:2
initial = 0, 0, 1, 0
t_span = 0:1
quantity.p = dissipated: p1
symmetry.translation = 0; 1; 0; 0
"""


def test_parse_hamiltonian_definition():
    entry = parse_system_text(DAMPED, "damped")
    assert entry.name == "damped"
    assert entry.system.kind == "hamiltonian"
    assert entry.params == {"kappa": "1"}
    assert entry.box[0] == (0.0, 2.0)
    np.testing.assert_array_equal(entry.initial, [0.0, 0.0, 1.0, 0.0])
    assert entry.t_span == (0.0, 1.0)
    assert entry.quantity("p").kind == DISSIPATED
    np.testing.assert_allclose(entry.system.field([0.0, 0.0, 1.0, 0.0]), [1.0, 1.0, -1.0, 0.5])
    report = classify_infinitesimal(entry.symmetry("translation").target, entry.system, BoxSampler(entry.box, 20))
    assert report.verdict(GENERALIZED) == PASS and report.verdict(DYNAMICAL) == PASS


def test_overrides_and_colon_syntax():
    text = "kind: lagrangian\nn: 2\nexpression: (v1^2 + v2^2)/2 - k*(q1^2 + q2^2)/2\nparam.k: 1\n"
    entry = parse_system_text(text, overrides={"k": 4})
    assert entry.params == {"k": "4"}
    assert entry.system.chart.names == ("t", "q1", "q2", "v1", "v2", "z")
    gamma = entry.system.field([0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    assert gamma[3] == pytest.approx(-4.0)
    assert entry.box == [(-2.0, 2.0)] * 6
    np.testing.assert_array_equal(entry.initial, np.zeros(6))


def test_exclusion_predicate():
    entry = parse_system_text("kind = hamiltonian\nn = 1\nexpression = p1^2/2\nexclude = q1\n")
    assert entry.exclude(np.array([0.0, 0.0, 1.0, 0.0]))
    assert not entry.exclude(np.array([0.0, 0.5, 1.0, 0.0]))


@pytest.mark.parametrize("text, message", [
    ("n = 1\nexpression = p1\n", "missing required key 'kind'"),
    ("kind = quantum\nn = 1\nexpression = p1\n", "kind must be"),
    ("kind = hamiltonian\nn = one\nexpression = p1\n", "n must be an integer"),
    ("kind = hamiltonian\nn = 0\nexpression = p1\n", "n must be at least 1"),
    ("kind = hamiltonian\nkind = lagrangian\nn = 1\nexpression = p1\n", "given twice"),
    ("kind = hamiltonian\nn = 1\nexpression = p1\ncolour = red\n", "unknown key 'colour'"),
    ("kind = hamiltonian\nn = 1\nexpression = p1\njust words\n", "line 4"),
    ("kind = hamiltonian\nn = 1\nexpression = p1\ninitial = 0, 1\n", "initial has 2 values"),
    ("kind = hamiltonian\nn = 1\nexpression = p1\nt_span = 0-1\n", "t_span must be"),
    ("kind = hamiltonian\nn = 1\nexpression = p1\nquantity.p = preserved: p1\n", "quantity must read"),
])
def test_malformed_definitions(text, message):
    with pytest.raises(SystemFileError, match=message):
        parse_system_text(text)


def test_expression_errors_propagate():
    with pytest.raises(ExprSyntaxError):
        parse_system_text("kind = hamiltonian\nn = 1\nexpression = p1 +\n")
    with pytest.raises(ExprSyntaxError):
        parse_system_text("kind = hamiltonian\nn = 1\nexpression = p1\nsymmetry.bad = 0; 1 +; 0; 0\n")
    with pytest.raises(ParamSchemaError):
        parse_system_text("kind = hamiltonian\nn = 1\nexpression = p1\n", overrides={"kappa": 1})


def test_parse_box():
    assert parse_box("0:1, -2:2", 2) == [(0.0, 1.0), (-2.0, 2.0)]
    for text, d in (("0:1", 2), ("0-1, 2:3", 2), ("1:0", 1), ("a:b", 1)):
        with pytest.raises(SystemFileError):
            parse_box(text, d)


def test_read_pairs_strips_comments():
    assert read_pairs("a = 1  # one\n\n# nothing\nb: x = y\n") == [(1, "a", "1"), (4, "b", "x = y")]


def test_load_system_file(tmp_path):
    path = tmp_path / "damped.sys"
    path.write_text(DAMPED, encoding="utf-8")
    entry = load_system_file(str(path))
    assert entry.name == "damped"
    with pytest.raises(SystemFileError, match="cannot read"):
        load_system_file(str(tmp_path / "missing.sys"))
    bad = tmp_path / "bad.sys"
    bad.write_text("kind = hamiltonian\n", encoding="utf-8")
    with pytest.raises(SystemFileError, match="bad.sys"):
        load_system_file(str(bad))
