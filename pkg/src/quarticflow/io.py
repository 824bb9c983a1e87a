"""File formats: deterministic JSON for artifacts and CSV for time series.

Floats are written with 17 significant digits so that every value
round-trips exactly; JSON keys are sorted, and files are written to a
temporary name in the target directory and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile

import numpy as np

from .charts import ChartedSystem
from .dynamics import Trajectory
from .errors import BadParams, InputOutputError
from .quartic_ode import FamilyParams, solve_u

SCHEMA = 1
_FLOAT = re.compile(r'"\\u0000f([^"]*)"')


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _tag(obj):
    if isinstance(obj, dict):
        return {str(k): _tag(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _tag(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return "\0f" + fmt_float(x) if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, 17-digit floats, non-finite as null)."""
    text = json.dumps(_tag(obj), sort_keys=True, indent=2, ensure_ascii=True)
    return _FLOAT.sub(r"\1", text) + "\n"


def atomic_write(path, text: str):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        raise InputOutputError(f"output directory {directory} does not exist")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write(path, dumps(obj))


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputOutputError(f"file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise InputOutputError(f"cannot read {path}: {exc}") from None


# ---------------------------------------------------------------------------
# systems


def system_to_dict(sys: ChartedSystem) -> dict:
    """Parameter record of a system; enough to rebuild it with :func:`system_from_dict`."""
    charts = []
    for name, ch in sys.charts.items():
        if ch.kind == "band":
            grid = {"kind": "band", "domain": list(ch.domain)}
        else:
            grid = {"kind": "radial", "s_max": ch.s_max, "rho_max": ch.rho_max}
        charts.append({"name": name, "coords": list(ch.coords), "grid": grid})
    out = {"schema": SCHEMA, **sys.params.as_dict(), "charts": charts}
    out["poles"] = list(sys.poles) if sys.poles else None
    out["finder"] = {"chart": sys.finder_chart,
                     "window": list(sys.finder_window) if sys.finder_window else None}
    return out


def system_from_dict(data: dict) -> ChartedSystem:
    """Rebuild a system from its parameter record."""
    from .family import build_base, build_general, build_shifted, flat_fixture
    from .kovalevskaya import kov_chart_system

    if data.get("schema") != SCHEMA:
        raise InputOutputError(f"unsupported schema {data.get('schema')!r}")
    kind = data.get("kind")
    global_ = not data.get("local", False)
    if kind == "base":
        return build_base(data["a"], data["b"], global_=global_)
    if kind == "shifted":
        return build_shifted(data["a"], data["b"], data["p"], global_=global_)
    if kind == "kovalevskaya":
        return kov_chart_system()
    if kind == "general":
        usol = solve_u(FamilyParams(data["a"], data["b"]), data["u0"], tuple(data["y_range"]))
        return build_general(usol, data.get("d") or 0.0, data.get("c") or 0.0, data.get("d1") or 0.0,
                             data.get("p"))
    if kind == "fixture":
        return flat_fixture()
    raise BadParams(f"unknown system kind {kind!r}")


def load_system(path) -> ChartedSystem:
    return system_from_dict(read_json(path))


# ---------------------------------------------------------------------------
# trajectories

TRAJECTORY_COLUMNS = ("t", "chart", "q1", "q2", "p1", "p2", "H", "F")


def trajectory_csv(traj: Trajectory, F=None, every: int = 1) -> str:
    """CSV text with columns ``t, chart, q1, q2, p1, p2, H, F`` (``F`` blank if absent)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    idx = np.arange(0, len(traj), every)
    if idx[-1] != len(traj) - 1:
        idx = np.append(idx, len(traj) - 1)
    for i in idx:
        row = [fmt_float(traj.t[i]), str(traj.chart[i])] + [fmt_float(v) for v in traj.z[i]]
        row += [fmt_float(traj.H[i]), "" if F is None else fmt_float(F[i])]
        w.writerow(row)
    return buf.getvalue()


def read_trajectory_csv(path) -> tuple:
    """Return ``(Trajectory, F or None)`` from a trajectory CSV."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise InputOutputError(f"file not found: {path}") from None
    if not rows or tuple(rows[0]) != TRAJECTORY_COLUMNS:
        raise InputOutputError(f"{path} is not a trajectory file")
    body = rows[1:]
    try:
        t = np.array([float(r[0]) for r in body])
        chart = np.array([r[1] for r in body])
        z = np.array([[float(v) for v in r[2:6]] for r in body])
        H = np.array([float(r[6]) for r in body])
        F = None if not body or body[0][7] == "" else np.array([float(r[7]) for r in body])
    except (ValueError, IndexError) as exc:
        raise InputOutputError(f"malformed trajectory file {path}: {exc}") from None
    return Trajectory(t, chart, z, H), F


def crossings_csv(crossings, sys: ChartedSystem) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "chart", "q1", "q2", "p1", "p2", "H"))
    for t, s in crossings:
        w.writerow([fmt_float(t), s.chart] + [fmt_float(v) for v in s.as_array()]
                   + [fmt_float(sys.hamiltonian(s))])
    return buf.getvalue()
