import json

import numpy as np
import pytest

import report
from integrate import Trajectory
from phase_space import ChartSpec

H1 = ChartSpec(1)


def _trajectory():
    t = np.array([0.0, 0.1, 0.2])
    states = np.array([[0.0, 1.0, 0.0], [0.1, 1.0 / 3.0, 2e-17], [0.2, np.pi, -1.5]])
    return Trajectory(H1, t, states, {"system": "demo", "method": "rk4"})


def test_csv_layout_and_precision():
    traj = _trajectory()
    text = report.render_csv(traj, {"E": np.array([1.0, 2.0, 3.0])})
    lines = text.splitlines()
    assert lines[0] == "t,q1,p1,z,E"
    assert lines[2].split(",")[0] == "0.10000000000000001"
    assert lines[2].split(",")[2] == "0.33333333333333331"
    assert len(lines) == 4


def test_csv_round_trips_exactly(tmp_path):
    traj = _trajectory()
    path = tmp_path / "traj.csv"
    report.write_trajectory(str(path), traj)
    headers, rows = report.load_trajectory_csv(str(path))
    assert headers == ["t", "q1", "p1", "z"]
    assert np.array_equal(rows, traj.points)


def test_json_is_sorted_and_versioned():
    text = report.render_json({"b": np.float64(1.5), "a": np.arange(3), "c": {"z": 1, "y": np.int64(2)}})
    doc = json.loads(text)
    assert doc == {"schema_version": 1, "a": [0, 1, 2], "b": 1.5, "c": {"y": 2, "z": 1}}
    assert text.index('"a"') < text.index('"b"') < text.index('"schema_version"')
    assert text.endswith("\n")
    with pytest.raises(TypeError):
        report.render_json({"bad": object()})


def test_trajectory_json(tmp_path):
    traj = _trajectory()
    path = tmp_path / "traj.json"
    report.write_trajectory(str(path), traj, {"E": [1.0, 2.0, 3.0]})
    doc = report.load_json(str(path))
    assert doc["kind"] == "trajectory"
    assert doc["columns"] == ["t", "q1", "p1", "z", "E"]
    assert doc["chart"] == {"n": 1, "kind": "hamiltonian", "coordinates": ["t", "q1", "p1", "z"]}
    assert doc["rows"][1] == [0.1, 0.1, 1.0 / 3.0, 2e-17, 2.0]
    assert doc["metadata"]["method"] == "rk4"


def test_identical_payloads_give_identical_bytes(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    report.write_json(str(first), report.trajectory_payload(_trajectory()))
    report.write_json(str(second), report.trajectory_payload(_trajectory()))
    assert first.read_bytes() == second.read_bytes()


def test_load_json_tolerates_missing_or_corrupt_files(tmp_path):
    assert report.load_json(str(tmp_path / "missing.json")) == {}
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    assert report.load_json(str(broken)) == {}
