import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quarticflow import PhaseState, integrate
from quarticflow import io as qio
from quarticflow.cli import main
from quarticflow.errors import InputOutputError


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    err = capsys.readouterr().err if capsys is not None else ""
    return code, err


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_round_trip_exactly(x):
    assert json.loads(qio.dumps({"x": x}))["x"] == x
    assert float(qio.fmt_float(x)) == x


def test_dumps_is_deterministic_and_nulls_nonfinite():
    obj = {"b": np.float64(0.1), "a": [np.inf, -np.inf, np.nan, 1, True], "c": np.arange(3)}
    text = qio.dumps(obj)
    assert text == qio.dumps(dict(reversed(list(obj.items()))))
    data = json.loads(text)
    assert data["a"] == [None, None, None, 1, True] and data["c"] == [0, 1, 2]
    assert list(data) == ["a", "b", "c"]


def test_atomic_write_leaves_no_temporaries(tmp_path):
    target = tmp_path / "out.json"
    qio.write_json(target, {"x": 1.0})
    qio.write_json(target, {"x": 2.0})
    assert os.listdir(tmp_path) == ["out.json"]
    assert qio.read_json(target) == {"x": 2.0}
    with pytest.raises(InputOutputError):
        qio.write_json(tmp_path / "missing" / "out.json", {})


@pytest.mark.parametrize("name", ["base1", "shifted1", "kov"])
def test_system_round_trip(request, name, rng):
    sys_ = request.getfixturevalue(name)
    back = qio.system_from_dict(json.loads(qio.dumps(qio.system_to_dict(sys_))))
    chart = "polar" if name == "kov" else "band"
    for _ in range(5):
        s = PhaseState(chart, np.array([rng.uniform(-3, 3), rng.uniform(0.6, 1.5)]), rng.normal(size=2))
        assert back.hamiltonian(s) == sys_.hamiltonian(s)


def test_trajectory_csv_round_trip(base1, tmp_path):
    traj = integrate(base1, PhaseState("band", np.array([0.0, 0.0]), np.array([1.0, 0.0])), 0.05)
    path = tmp_path / "t.csv"
    qio.atomic_write(path, qio.trajectory_csv(traj))
    with open(path) as fh:
        assert next(csv.reader(fh)) == list(qio.TRAJECTORY_COLUMNS)
    back, F = qio.read_trajectory_csv(path)
    assert F is None
    assert np.array_equal(back.z, traj.z) and np.array_equal(back.H, traj.H)
    assert list(back.chart) == list(traj.chart)


def test_construct_is_byte_identical(tmp_path):
    for name in ("a.json", "b.json"):
        assert main(["construct", "--family", "shifted", "--a", "1", "--p", "1", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_exit_codes(tmp_path, capsys):
    code, err = run(["construct", "--family", "shifted", "--a", "1", "--p", "-0.75"], capsys)
    assert code == 2
    assert err.startswith("error code=INADMISSIBLE_P") and "(-inf,-1) U (-0.5,inf)" in err
    code, err = run(["simulate", "--system", tmp_path / "nope.json", "--T", "1"], capsys)
    assert code == 3 and "type=" in err
    code, _ = run(["construct", "--family", "base", "--out", tmp_path / "missing" / "s.json"], capsys)
    assert code == 3
    sysfile = tmp_path / "s.json"
    assert main(["construct", "--family", "base", "--a", "0", "--out", str(sysfile)]) == 0
    code, err = run(["simulate", "--system", sysfile, "--dt", "3", "--T", "30", "--p0", "4,3"], capsys)
    assert code == 4 and "NEWTON" in err
    code, _ = run(["simulate", "--system", sysfile, "--dt", "-1"], capsys)
    assert code == 2


def test_pipeline_and_report(tmp_path, capsys):
    p = {k: str(tmp_path / v) for k, v in dict(sys="sys.json", crit="crit.json", traj="traj.csv",
                                                  integral="int.json", kmap="kmap.json", rep="rep.json",
                                                  md="rep.md", cross="cross.csv").items()}
    assert main(["construct", "--family", "base", "--a", "0", "--out", p["sys"]]) == 0
    assert main(["check-criterion", "--system", p["sys"], "--grid", "10x10", "--out", p["crit"]]) == 0
    assert main(["find-integral", "--system", p["sys"], "--out", p["integral"]]) == 0
    assert main(["simulate", "--system", p["sys"], "--q0", "1,0", "--p0", "0.5,0.5", "--T", "10",
                 "--scheme", "midpoint4", "--integral", p["integral"], "--out", p["traj"]]) == 0
    assert main(["poincare", "--system", p["sys"], "--trajectory", p["traj"], "--section-chart", "band",
                 "--out", p["cross"]]) == 0
    assert main(["kovalevskaya-map", "--grid", "10x10", "--out", p["kmap"]]) == 0
    assert main(["report", "--system", p["sys"], "--criterion", p["crit"], "--trajectory", p["traj"],
                 "--integral", p["integral"], "--kovalevskaya", p["kmap"], "--markdown", p["md"],
                 "--out", p["rep"]]) == 0
    rep = qio.read_json(p["rep"])
    assert rep["all_pass"], rep["checks"]
    assert set(rep["checks"]) == {"criterion", "energy_drift", "nullspace", "integral_drift", "kovalevskaya"}
    _, F = qio.read_trajectory_csv(p["traj"])
    assert F is not None and np.ptp(F) < 1e-6 * max(1.0, np.abs(F).max())
    with open(p["cross"]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "t" and all(float(r[2]) == 0.0 for r in rows[1:])
    os.remove(p["crit"])
    code, _ = run(["report", "--criterion", p["crit"]], capsys)
    assert code == 3


def test_threads_variable_is_forwarded():
    env = {**os.environ, "QF_THREADS": "2"}
    for key in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS"):
        env.pop(key, None)
    out = subprocess.run([sys.executable, "-c", "import os, quarticflow; print(os.environ['OMP_NUM_THREADS'])"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "2"
