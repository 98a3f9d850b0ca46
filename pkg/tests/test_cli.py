import json

import pytest

import catalog
from cli import (EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VERIFICATION, attach_option_values, force_zero_time_component,
                 main, parse_set)

FAST = ["--samples", "20", "--seed", "7"]


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_list_examples(capsys):
    assert main(["list-examples"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert [line.split("\t")[0] for line in lines] == list(catalog.EXAMPLE_NAMES)


@pytest.mark.parametrize("argv", [
    [],
    ["simulate"],
    ["simulate", "--system", "kepler"],
    ["simulate", "--system", "free_particle_tdm", "--set", "mass=2"],
    ["simulate", "--system", "free_particle_tdm", "--set", "kappa"],
    ["simulate", "--system", "free_particle_tdm", "--dt", "1e-3", "--rtol", "1e-8"],
    ["simulate", "--system", "free_particle_tdm", "--initial", "0,1"],
    ["simulate", "--system", "free_particle_tdm", "--observe", "p1 +"],
    ["simulate", "--system", "r4_linear", "--side", "companion"],
    ["verify", "quantity", "--system", "r4_linear"],
    ["verify", "quantity", "--system", "r4_linear", "--quantity", "energy"],
    ["classify", "field", "--system", "r4_linear"],
    ["classify", "field", "--system", "r4_linear", "--components", "0;0;w;0"],
    ["classify", "map", "--system", "r4_linear", "--map", "t;q1;p1"],
    ["classify", "map", "--system", "r4_linear", "--map", "t;q1;p1;z"],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_verify_quantity_verdicts(capsys):
    assert main(["verify", "quantity", "--system", "r4_linear", "--expr", "p1", "--kind", "dissipated"] + FAST) == EXIT_OK
    doc = _json(capsys)
    assert doc["verdict"] == "pass"
    assert doc["pointwise"]["seed"] == 7 and doc["pointwise"]["samples"] == 20
    assert main(["verify", "quantity", "--system", "r4_linear", "--expr", "p1", "--kind", "conserved"] + FAST) \
        == EXIT_VERIFICATION
    assert _json(capsys)["verdict"] == "fail"


def test_verify_quantity_expected_failure(capsys):
    argv = ["verify", "quantity", "--system", "r4_linear", "--expr", "p1", "--kind", "conserved"] + FAST
    assert main(argv + ["--expect", "conserved=fail"]) == EXIT_OK
    doc = _json(capsys)
    assert doc["verdict"] == "pass"
    assert doc["expected"] == {"conserved": "fail"}


def test_verify_registered_quantity_along_flow(capsys):
    argv = ["verify", "quantity", "--system", "free_particle_tdm", "--quantity", "p", "--along", "--dt", "1e-3"]
    assert main(argv + FAST) == EXIT_OK
    doc = _json(capsys)
    assert doc["along"]["verdict"] == "pass"
    assert doc["along"]["trajectory"]["steps"] == 1000


def test_classify_field_with_expectations(capsys):
    argv = ["classify", "field", "--system", "r4_linear", "--components", "0;0;1;0"] + FAST
    assert main(argv + ["--expect", "generalized=pass", "--expect", "dynamical=fail"]) == EXIT_OK
    assert _json(capsys)["verdict"] == "pass"
    assert main(argv + ["--expect", "dynamical=pass"]) == EXIT_VERIFICATION
    assert _json(capsys)["verdict"] == "fail"


def test_classify_registered_field_with_witness(capsys):
    argv = ["classify", "field", "--system", "cartan_counterexample", "--symmetry", "Y2"] + FAST
    assert main(argv) == EXIT_OK
    classes = {c["class"]: c["verdict"] for r in _json(capsys)["reports"] for c in r["classes"]}
    assert classes["cartan"] == "pass"
    assert classes["strict_hamiltonian"] == "fail"


def test_classify_field_forces_time_component(capsys, caplog):
    argv = ["classify", "field", "--system", "h_preserving_counterexample", "--components", "1;1;0;0"] + FAST
    assert main(argv) == EXIT_OK
    assert "Forcing the t-component" in caplog.text
    report = _json(capsys)["reports"][0]
    assert report["subject"] == "1;1;0;0"
    assert {c["class"]: c["verdict"] for c in report["classes"]}["dynamical"] == "pass"


def test_classify_lift_on_lagrangian(capsys):
    argv = ["classify", "field", "--system", "central_potential_tdm", "--lift", "-q2;q1", "--conformal",
            "--expect", "extended_natural=pass", "--expect", "conformal_hamiltonian=pass"] + FAST
    assert main(argv) == EXIT_OK
    assert len(_json(capsys)["reports"]) == 2


def test_classify_maps(capsys):
    argv = ["classify", "map", "--system", "r4_linear", "--map", "t;q1;p1+1;z", "--kind", "generalized",
            "--expect", "generalized=fail"] + FAST
    assert main(argv) == EXIT_OK
    capsys.readouterr()
    assert main(["classify", "map", "--system", "h_preserving_counterexample", "--symmetry", "Phi_2z"] + FAST) == EXIT_OK
    assert _json(capsys)["verdict"] == "pass"


def test_singular_map_is_a_runtime_error():
    argv = ["classify", "map", "--system", "r4_linear", "--map", "t;q1;0*p1;z", "--kind", "generalized"] + FAST
    assert main(argv) == EXIT_RUNTIME


def test_simulate_is_deterministic(tmp_path):
    outputs = []
    for name in ("a.csv", "b.csv", "a.json", "b.json"):
        path = tmp_path / name
        argv = ["simulate", "--system", "free_particle_tdm", "--t1", "0.5", "--dt", "1e-2", "--observe", "H",
                "--observe", "p1*exp(t)", "--out", str(path)]
        assert main(argv) == EXIT_OK
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[2] == outputs[3]
    header = outputs[0].decode().splitlines()[0]
    assert header == "t,q1,p1,z,H,p1*exp(t)"


def test_verify_reports_are_byte_identical(tmp_path):
    paths = [tmp_path / "one.json", tmp_path / "two.json"]
    for path in paths:
        argv = ["verify", "quantity", "--system", "cartan_counterexample", "--quantity", "H", "--out", str(path)]
        assert main(argv + FAST) == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_simulate_system_file(tmp_path, capsys):
    path = tmp_path / "oscillator.sys"
    path.write_text("kind = lagrangian\nn = 1\nexpression = v1^2/2 - q1^2/2 - gamma*z\nparam.gamma = 0.1\n"
                    "initial = 0, 1, 0, 0\nt_span = 0:0.1\n", encoding="utf-8")
    assert main(["simulate", "--system", str(path), "--dt", "0.01", "--set", "gamma=0.2", "--observe", "E"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,q1,v1,z,E"
    assert len(lines) == 12


def test_helpers():
    assert parse_set(["a=1", " b = x+y "]) == {"a": "1", "b": "x+y"}
    assert force_zero_time_component("0; 1; 0; 0") == "0; 1; 0; 0"
    assert force_zero_time_component("t;1;0;0") == "0;1;0;0"


def test_values_with_leading_minus(capsys):
    argv = ["simulate", "--system", "free_particle_tdm", "--t1", "0.01", "--dt", "0.005",
            "--initial", "-0.5,-1,2,0", "--observe", "-p1"]
    assert main(argv) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,q1,p1,z,-p1"
    first = [float(v) for v in lines[1].split(",")]
    assert first == [0.0, -1.0, 2.0, 0.0, -2.0]


def test_attach_option_values():
    assert attach_option_values(["classify", "field", "--lift", "-q2;q1", "--conformal"]) == \
        ["classify", "field", "--lift=-q2;q1", "--conformal"]
    assert attach_option_values(["--expr", "p1", "--kind", "dissipated"]) == ["--expr", "p1", "--kind", "dissipated"]
    assert attach_option_values(["--box", "-1:1,-2:2"]) == ["--box=-1:1,-2:2"]
    assert attach_option_values(["--components", "--fd"]) == ["--components", "--fd"]
    assert attach_option_values(["--observe"]) == ["--observe"]
