"""
Artifact writers: trajectory CSV, trajectory JSON and report JSON.

CSV columns are fixed: t, q1..qn, p1..pn (or v1..vn), z, then one column per
observable in the order given. Floats carry 17 significant digits so a CSV
round-trips to the same doubles. JSON is written with sorted keys and a
schema_version so identical inputs give byte-identical files.
"""

import csv
import io
import json
import logging
from typing import Mapping

import numpy as np

import config
from integrate import Trajectory

log = logging.getLogger(__name__)


def trajectory_headers(traj: Trajectory, observables: Mapping[str, np.ndarray] | None = None) -> list[str]:
    return list(traj.chart.names) + list(observables or {})


def _fmt(value: float) -> str:
    return format(float(value), config.FLOAT_FORMAT)


def trajectory_rows(traj: Trajectory, observables: Mapping[str, np.ndarray] | None = None) -> list[list[str]]:
    columns = [traj.points] + [np.asarray(v, dtype=float).reshape(-1, 1) for v in (observables or {}).values()]
    table = np.hstack(columns)
    return [[_fmt(v) for v in row] for row in table]


def render_csv(traj: Trajectory, observables: Mapping[str, np.ndarray] | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trajectory_headers(traj, observables))
    writer.writerows(trajectory_rows(traj, observables))
    return buf.getvalue()


def write_trajectory_csv(path: str, traj: Trajectory, observables: Mapping[str, np.ndarray] | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(render_csv(traj, observables))
    log.info("Wrote %d row(s) to '%s'", len(traj), path)


def _encode(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def render_json(payload: dict) -> str:
    document = {"schema_version": config.SCHEMA_VERSION, **payload}
    return json.dumps(document, indent=2, sort_keys=True, default=_encode) + "\n"


def trajectory_payload(traj: Trajectory, observables: Mapping[str, np.ndarray] | None = None) -> dict:
    return {
        "kind": "trajectory",
        "chart": {"n": traj.chart.n, "kind": traj.chart.kind, "coordinates": list(traj.chart.names)},
        "metadata": traj.metadata,
        "columns": trajectory_headers(traj, observables),
        "rows": np.hstack([traj.points] + [np.asarray(v, dtype=float).reshape(-1, 1)
                                           for v in (observables or {}).values()]).tolist(),
    }


def write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(render_json(payload))
    log.info("Wrote report to '%s'", path)


def write_trajectory(path: str, traj: Trajectory, observables: Mapping[str, np.ndarray] | None = None) -> None:
    """Pick the format from the extension: .json for JSON, CSV otherwise."""
    if path.lower().endswith(".json"):
        write_json(path, trajectory_payload(traj, observables))
    else:
        write_trajectory_csv(path, traj, observables)


def load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (FileNotFoundError, json.JSONDecodeError):
        return {}


def load_trajectory_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        headers = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return headers, np.array(rows)
