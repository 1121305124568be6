"""Lossless CSV/JSON writers for trajectories, sample sets and comparisons.

Every file starts with the format marker (``# multimpact-format v1`` as a
comment line in CSV, a ``"format"`` key in JSON), and every number is
written with ``repr``, the shortest representation that round-trips to the
exact same double.  No timestamps or environment data are written, so
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .contact import ImpactProblem
from .oracles import DenseTrajectory
from .resolution import Trajectory
from .setapprox import PostImpactSet

__all__ = [
    "FORMAT_MARKER",
    "trajectory_to_csv",
    "trajectory_to_json",
    "set_to_csv",
    "set_to_json",
    "compare_to_csv",
    "compare_to_json",
    "dense_to_csv",
    "dense_to_json",
]

FORMAT_MARKER = "multimpact-format v1"


def _fmt(value: float) -> str:
    return repr(float(value))


def _write(path: str | Path | None, text: str) -> str:
    if path is not None:
        Path(path).write_text(text)
    return text


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = _io.StringIO()
    buf.write(f"# {FORMAT_MARKER}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(payload: dict) -> str:
    return json.dumps({"format": FORMAT_MARKER, **payload}, indent=2) + "\n"


def _impulse_columns(problem: ImpactProblem) -> list[str]:
    cols = [f"lambda_max_{lbl}" for lbl in problem.labels]
    cols += [f"lambda_n_{lbl}" for lbl in problem.labels]
    for lbl in problem.labels:
        cols += [f"beta_{lbl}_pos", f"beta_{lbl}_neg"]
    return cols


def _velocity_columns(n_v: int) -> list[str]:
    return [f"v_{k}" for k in range(n_v)]


def _projection_columns(problem: ImpactProblem) -> list[str]:
    cols = [f"jn_v_{lbl}" for lbl in problem.labels]
    cols += [f"jt_v_{lbl}" for lbl in problem.labels]
    return cols


def _projections(problem: ImpactProblem, v: np.ndarray) -> list[float]:
    jn_v = problem.jn @ v
    jt_v = problem.jd[0::2] @ v
    return [*jn_v, *jt_v]


# ---------------------------------------------------------------------------
# Trajectories


def _trajectory_rows(traj: Trajectory, problem: ImpactProblem) -> list[list[str]]:
    rows = []
    for k, step in enumerate(traj.steps):
        beta_interleaved = []
        for i in range(problem.n_contacts):
            beta_interleaved += [step.beta[2 * i], step.beta[2 * i + 1]]
        numbers = [
            *step.lambda_max,
            *step.lambda_n,
            *beta_interleaved,
            *step.v_after,
            step.energy_after,
        ]
        rows.append([str(k), *[_fmt(x) for x in numbers]])
    return rows


def trajectory_to_csv(
    traj: Trajectory, problem: ImpactProblem, path: str | Path | None = None
) -> str:
    header = (
        ["step"]
        + _impulse_columns(problem)
        + _velocity_columns(problem.n_v)
        + ["energy"]
    )
    return _write(path, _csv_text(header, _trajectory_rows(traj, problem)))


def trajectory_to_json(
    traj: Trajectory, problem: ImpactProblem, path: str | Path | None = None
) -> str:
    payload = {
        "kind": "trajectory",
        "labels": list(problem.labels),
        "h": traj.h,
        "rng_seed": traj.rng_seed,
        "terminated": traj.terminated,
        "v0": traj.v0.tolist(),
        "v_final": traj.v_final.tolist(),
        "steps": [
            {
                "lambda_max": step.lambda_max.tolist(),
                "lambda_n": step.lambda_n.tolist(),
                "beta": step.beta.tolist(),
                "v_after": step.v_after.tolist(),
                "energy_before": step.energy_before,
                "energy_after": step.energy_after,
            }
            for step in traj.steps
        ],
    }
    return _write(path, _json_text(payload))


# ---------------------------------------------------------------------------
# Post-impact sample sets


def set_to_csv(
    post_set: PostImpactSet, problem: ImpactProblem, path: str | Path | None = None
) -> str:
    header = (
        ["traj"] + _velocity_columns(problem.n_v) + _projection_columns(problem)
    )
    rows = []
    for idx, v in zip(post_set.traj_indices, post_set.samples):
        numbers = [*v, *_projections(problem, v)]
        rows.append([str(int(idx)), *[_fmt(x) for x in numbers]])
    return _write(path, _csv_text(header, rows))


def set_to_json(
    post_set: PostImpactSet, problem: ImpactProblem, path: str | Path | None = None
) -> str:
    payload = {
        "kind": "post_impact_set",
        "labels": list(problem.labels),
        "params": post_set.params,
        "rejected_count": post_set.rejected_count,
        "traj_indices": post_set.traj_indices.tolist(),
        "samples": post_set.samples.tolist(),
    }
    return _write(path, _json_text(payload))


# ---------------------------------------------------------------------------
# Baseline comparisons: rows of (method, order, v_plus)


def compare_to_csv(
    rows: list[tuple[str, str, np.ndarray]],
    problem: ImpactProblem,
    path: str | Path | None = None,
) -> str:
    header = (
        ["method", "order"]
        + _velocity_columns(problem.n_v)
        + _projection_columns(problem)
    )
    out = []
    for method, order, v in rows:
        numbers = [*v, *_projections(problem, v)]
        out.append([method, order, *[_fmt(x) for x in numbers]])
    return _write(path, _csv_text(header, out))


def compare_to_json(
    rows: list[tuple[str, str, np.ndarray]],
    problem: ImpactProblem,
    path: str | Path | None = None,
) -> str:
    payload = {
        "kind": "comparison",
        "labels": list(problem.labels),
        "rows": [
            {
                "method": method,
                "order": order,
                "v_plus": np.asarray(v).tolist(),
                "jn_v": (problem.jn @ v).tolist(),
                "jt_v": (problem.jd[0::2] @ v).tolist(),
            }
            for method, order, v in rows
        ],
    }
    return _write(path, _json_text(payload))


# ---------------------------------------------------------------------------
# Dense single-contact reference paths


def dense_to_csv(
    dense: DenseTrajectory, problem: ImpactProblem, path: str | Path | None = None
) -> str:
    header = ["impulse"] + _velocity_columns(problem.n_v) + ["mode"]
    rows = []
    for k in range(len(dense.s_grid)):
        mode = dense.modes[k - 1] if k > 0 else ""
        rows.append(
            [_fmt(dense.s_grid[k]), *[_fmt(x) for x in dense.v_grid[k]], mode]
        )
    return _write(path, _csv_text(header, rows))


def dense_to_json(
    dense: DenseTrajectory, problem: ImpactProblem, path: str | Path | None = None
) -> str:
    payload = {
        "kind": "dense_reference",
        "labels": list(problem.labels),
        "impulse": dense.s_grid.tolist(),
        "velocities": dense.v_grid.tolist(),
        "modes": list(dense.modes),
    }
    return _write(path, _json_text(payload))
