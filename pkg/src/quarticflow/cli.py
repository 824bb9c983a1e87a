"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 numerical
failure.  Errors are reported on stderr as one line
``error code=<CODE> type=<Exception> message=<text>``.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import io as qio
from .charts import PhaseState
from .criterion import D_NONZERO, D_ZERO, FAnsatz, check_grid
from .dynamics import IntegratorConfig, Section, in_chart, integrate, poincare
from .errors import BadParams, InputOutputError, NumericalError, QuarticFlowError, ValidationError
from .integral_finder import QuarticAnsatz, certify, find_integrals, bracket_operator, trivial_integrals
from .quartic_ode import FamilyParams, solve_u

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4

DEFAULT_TOLERANCES = {"criterion": 1e-7, "energy": 1e-8, "integral": 1e-6, "gap": 1e3}


@dataclass
class RunConfig:
    """Validated arguments of one subcommand."""

    subcommand: str
    inputs: dict = field(default_factory=dict)
    output: str | None = None
    numbers: dict = field(default_factory=dict)
    seed: int | None = None

    def validate(self):
        for key, value in self.numbers.items():
            if key.startswith("tol") and not value > 0.0:
                raise BadParams(f"{key} must be positive")
        for name, path in self.inputs.items():
            if path is not None and not os.path.isfile(path):
                raise InputOutputError(f"{name} file not found: {path}")
        if self.output is not None:
            directory = os.path.dirname(os.path.abspath(self.output))
            if not os.path.isdir(directory):
                raise InputOutputError(f"output directory {directory} does not exist")
        return self


def _pair(text, name):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise BadParams(f"{name} must be two comma-separated numbers") from None
    if len(vals) != 2:
        raise BadParams(f"{name} must be two comma-separated numbers")
    return vals


def _grid(text):
    try:
        n, m = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise BadParams("grid must look like NxM") from None
    if n < 2 or m < 2:
        raise BadParams("grid needs at least 2 points per axis")
    return n, m


def _emit(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        qio.atomic_write(path, text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_construct(args):
    from .family import build_base, build_general, build_shifted
    from .kovalevskaya import kov_chart_system

    RunConfig("construct", output=args.out).validate()
    if args.family == "base":
        system = build_base(args.a, args.b, global_=not args.local)
    elif args.family == "shifted":
        system = build_shifted(args.a, args.b, args.p, global_=not args.local)
    elif args.family == "general":
        lo, hi = _pair(args.y_range, "--y-range")
        usol = solve_u(FamilyParams(args.a, args.b), args.u0, (lo, hi))
        system = build_general(usol, args.d, args.c, args.d1, args.p if args.d != 0.0 else None)
    else:
        system = kov_chart_system()
    _emit(args.out, qio.dumps(qio.system_to_dict(system)))


def _criterion_ansatz(data, args):
    kind = data["kind"]
    if kind not in ("base", "shifted", "general"):
        raise BadParams(f"the criterion ansatz is defined for the families, not {kind!r}")
    d = args.d if args.d is not None else (data.get("d") or (0.5 if kind == "shifted" else 0.0))
    p = args.p if args.p is not None else (data.get("p") or 0.0)
    c = args.c if args.c is not None else (data.get("c") or 1.0)
    d1 = args.d1 if args.d1 is not None else (data.get("d1") or 0.0)
    lo, hi = args.y_range
    usol = solve_u(FamilyParams(data["a"], data["b"]), 0.0, (min(lo, -5.0), max(hi, 5.0)))
    mode = D_ZERO if d == 0.0 else D_NONZERO
    return FAnsatz(usol, mode, d=d, c=c if mode == D_ZERO else 0.0, d1=d1, p=p)


def cmd_check_criterion(args):
    cfg = RunConfig("check-criterion", {"system": args.system}, args.out, seed=args.seed).validate()
    data = qio.read_json(args.system)
    args.y_range = _pair(args.y_range, "--y-range")
    ansatz = _criterion_ansatz(data, args)
    shape = _grid(args.grid)
    rng = None if cfg.seed is None else np.random.default_rng(cfg.seed)
    rep = check_grid(ansatz, (0.0, 2 * np.pi), tuple(args.y_range), shape, rng=rng)
    out = {"schema": qio.SCHEMA, "command": "check-criterion", "system": data,
           "params": {"grid": list(shape), "y_range": args.y_range, "seed": cfg.seed,
                      "xi_mode": ansatz.xi_mode, "d": ansatz.d, "c": ansatz.c, "d1": ansatz.d1, "p": ansatz.p},
           "result": rep.as_dict()}
    _emit(args.out, qio.dumps(out))


def _initial_state(system, args):
    chart = args.chart or system.finder_chart or next(iter(system.charts))
    q = _pair(args.q0, "--q0")
    p = _pair(args.p0, "--p0")
    return PhaseState(chart, np.array(q), np.array(p))


def _run(system, args):
    cfg = IntegratorConfig(dt=args.dt, scheme=args.scheme)
    return integrate(system, _initial_state(system, args), args.T, cfg)


def _load_integral(path):
    data = qio.read_json(path)
    ans = data.get("ansatz")
    if ans is None or ans.get("coefficients") is None:
        raise InputOutputError(f"{path} holds no integral coefficients")
    return QuarticAnsatz.from_dict(ans)


def cmd_simulate(args):
    RunConfig("simulate", {"system": args.system, "integral": args.integral}, args.out).validate()
    system = qio.load_system(args.system)
    traj = _run(system, args)
    F = None
    if args.integral:
        ans = _load_integral(args.integral)
        zb = in_chart(system, traj, ans.chart)
        F = ans.evaluate(zb[:, 0], zb[:, 1], zb[:, 2], zb[:, 3])
    _emit(args.out, qio.trajectory_csv(traj, F, every=args.every))


def _section(text, direction, chart):
    try:
        coord, value = text.split("=")
        value = float(value)
    except ValueError:
        raise BadParams("section must look like q1=0") from None
    if coord not in ("q1", "q2", "p1", "p2"):
        raise BadParams(f"unknown section coordinate {coord!r}")
    return Section(coord, value, {"+": 1, "-": -1, "0": 0}[direction], chart)


def cmd_poincare(args):
    RunConfig("poincare", {"system": args.system, "trajectory": args.trajectory}, args.out).validate()
    system = qio.load_system(args.system)
    if args.trajectory:
        traj, _ = qio.read_trajectory_csv(args.trajectory)
    else:
        traj = _run(system, args)
    chart = args.section_chart or system.finder_chart
    crossings = poincare(system, traj, _section(args.section, args.direction, chart))
    _emit(args.out, qio.crossings_csv(crossings, system))


def cmd_find_integral(args):
    RunConfig("find-integral", {"system": args.system}, args.out).validate()
    data = qio.read_json(args.system)
    system = qio.system_from_dict(data)
    window = tuple(_pair(args.window, "--window")) if args.window else system.finder_window
    chart = args.chart or system.finder_chart
    ansatz = QuarticAnsatz(args.degree, args.fourier, args.radial, window, chart)
    op = bracket_operator(system, ansatz)
    rep = find_integrals(op, trivial_integrals(system, ansatz), seed=args.seed or 0)
    coef = rep.nontrivial[:, 0] if rep.deflated_dimension else None
    ans_out = ansatz.with_coefficients(coef) if coef is not None else ansatz
    out = {"schema": qio.SCHEMA, "command": "find-integral", "system": data,
           "params": {"degree": args.degree, "fourier": args.fourier, "radial": args.radial,
                      "window": list(window), "chart": chart, "seed": args.seed},
           "ansatz": ans_out.to_dict(), "report": rep.as_dict()}
    _emit(args.out, qio.dumps(out))


def cmd_kovalevskaya_map(args):
    from .kovalevskaya import (compare_with_shifted, goryachev_reference, kovalevskaya_reference,
                               match_kovalevskaya, verify_metric_identity)

    RunConfig("kovalevskaya-map", output=args.out).validate()
    n, m = _grid(args.grid)
    u = np.geomspace(0.05, 20.0, n)
    phi = np.linspace(0.0, 2 * np.pi, m)
    U, P = np.meshgrid(u, phi, indexing="ij")
    identity = max(float(np.max(verify_metric_identity(U, P, h))) for h in (1, -1))
    match = match_kovalevskaya(U, P)
    shifted = compare_with_shifted(U, P)
    pts = np.stack([np.cos(P) * np.sin(1 / (1 + U)), np.sin(P) * np.sin(1 / (1 + U)), np.cos(1 / (1 + U))])
    same = (goryachev_reference(0.0, 0.0).potential(*pts).tobytes()
            == kovalevskaya_reference().potential(*pts).tobytes())
    out = {"schema": qio.SCHEMA, "command": "kovalevskaya-map",
           "params": {"grid": [n, m], "u_range": [0.05, 20.0]},
           "result": {"metric_identity": identity, **match, "shifted_comparison": shifted,
                      "goryachev_zero_is_kovalevskaya": same}}
    _emit(args.out, qio.dumps(out))


def _check(value, tol, below=True):
    ok = value is not None and np.isfinite(value) and (value < tol if below else value >= tol)
    return {"value": value, "tolerance": tol, "pass": bool(ok)}


def cmd_report(args):
    inputs = {"system": args.system, "criterion": args.criterion, "trajectory": args.trajectory,
              "integral": args.integral, "kovalevskaya": args.kovalevskaya}
    tols = {**DEFAULT_TOLERANCES}
    for key in tols:
        value = getattr(args, f"tol_{key}")
        if value is not None:
            tols[key] = value
    RunConfig("report", inputs, args.out, {f"tol_{k}": v for k, v in tols.items()}).validate()
    checks = {}
    system = qio.load_system(args.system) if args.system else None
    if args.criterion:
        res = qio.read_json(args.criterion)["result"]
        checks["criterion"] = _check(res["max_relative"], tols["criterion"])
    traj = None
    if args.trajectory:
        traj, _ = qio.read_trajectory_csv(args.trajectory)
        checks["energy_drift"] = _check(float(np.max(np.abs(traj.H - traj.H[0])) / abs(traj.H[0])),
                                        tols["energy"])
    if args.integral:
        data = qio.read_json(args.integral)
        rep = data["report"]
        deg = data["params"]["degree"]
        if deg >= 4:
            checks["nullspace"] = _check(rep["deflated_dimension"], 1, below=False)
        else:
            checks["nullspace"] = {"value": rep["deflated_dimension"], "gap_ratio": rep["gap_ratio"],
                                   "pass": rep["deflated_dimension"] == 0 and rep["gap_ratio"] >= tols["gap"]}
        if traj is not None and system is not None and data["ansatz"].get("coefficients") is not None:
            ans = QuarticAnsatz.from_dict(data["ansatz"])
            checks["integral_drift"] = _check(certify(system, ans, traj), tols["integral"])
    if args.kovalevskaya:
        res = qio.read_json(args.kovalevskaya)["result"]
        worst = max(res["metric_identity"], res["metric_mismatch"], res["potential_mismatch"])
        checks["kovalevskaya"] = _check(worst, 1e-10)
    if not checks:
        raise InputOutputError("report needs at least one input file")
    out = {"schema": qio.SCHEMA, "command": "report", "params": {"inputs": inputs, "tolerances": tols},
           "checks": checks, "all_pass": all(c["pass"] for c in checks.values())}
    text = qio.dumps(out)
    if args.markdown:
        lines = ["| check | value | pass |", "|---|---|---|"]
        for name, c in sorted(checks.items()):
            lines.append(f"| {name} | {c['value']} | {'yes' if c['pass'] else 'no'} |")
        qio.atomic_write(args.markdown, "\n".join(lines) + "\n")
    _emit(args.out, text)


# ---------------------------------------------------------------------------
# parser


def _add_run_args(p):
    p.add_argument("--q0", default="0,0", help="initial position 'q1,q2'")
    p.add_argument("--p0", default="1,0", help="initial momentum 'p1,p2'")
    p.add_argument("--chart", default=None, help="chart of the initial state")
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--scheme", choices=("implicit_midpoint", "midpoint4"), default="implicit_midpoint")


def build_parser():
    parser = argparse.ArgumentParser(prog="quarticflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="write a system file")
    p.add_argument("--family", choices=("base", "shifted", "general", "kovalevskaya"), required=True)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--local", action="store_true", help="band chart only, no global atlas")
    p.add_argument("--u0", type=float, default=0.0)
    p.add_argument("--y-range", default="-5,5")
    p.add_argument("--d", type=float, default=0.0)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--d1", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("check-criterion", help="evaluate the PDE criterion on a grid")
    p.add_argument("--system", required=True)
    p.add_argument("--grid", default="30x30")
    p.add_argument("--y-range", default="-2,2")
    p.add_argument("--d", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--d1", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--seed", type=int, help="draw random points instead of the tensor grid")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_criterion)

    p = sub.add_parser("simulate", help="integrate a trajectory to CSV")
    p.add_argument("--system", required=True)
    _add_run_args(p)
    p.add_argument("--integral", help="integral file whose F is recorded along the trajectory")
    p.add_argument("--every", type=int, default=1, help="write every k-th sample")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("poincare", help="section crossings to CSV")
    p.add_argument("--system", required=True)
    p.add_argument("--trajectory", help="trajectory CSV; integrates from --q0/--p0 when absent")
    _add_run_args(p)
    p.add_argument("--section", default="q1=0")
    p.add_argument("--direction", choices=("+", "-", "0"), default="+")
    p.add_argument("--section-chart")
    p.add_argument("--out")
    p.set_defaults(func=cmd_poincare)

    p = sub.add_parser("find-integral", help="reconstruct polynomial integrals")
    p.add_argument("--system", required=True)
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--fourier", type=int, default=6)
    p.add_argument("--radial", type=int, default=48)
    p.add_argument("--window", help="collocation window 'lo,hi'")
    p.add_argument("--chart")
    p.add_argument("--seed", type=int, default=0, help="seed of the inverse-iteration start")
    p.add_argument("--out")
    p.set_defaults(func=cmd_find_integral)

    p = sub.add_parser("kovalevskaya-map", help="mismatches of the Kovalevskaya correspondence")
    p.add_argument("--grid", default="50x50")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kovalevskaya_map)

    p = sub.add_parser("report", help="collate artifacts into pass/fail checks")
    p.add_argument("--system")
    p.add_argument("--criterion")
    p.add_argument("--trajectory")
    p.add_argument("--integral")
    p.add_argument("--kovalevskaya")
    for key in DEFAULT_TOLERANCES:
        p.add_argument(f"--tol-{key}", type=float)
    p.add_argument("--markdown", help="also write a markdown table here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def _fail(exc, code):
    name = getattr(exc, "code", "IO_ERROR" if code == EXIT_IO else "ERROR")
    msg = " ".join(str(exc).split())
    print(f"error code={name} type={type(exc).__name__} message={msg}", file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        return _fail(exc, EXIT_VALIDATION)
    except InputOutputError as exc:
        return _fail(exc, EXIT_IO)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    except NumericalError as exc:
        return _fail(exc, EXIT_NUMERICAL)
    except QuarticFlowError as exc:
        return _fail(exc, EXIT_NUMERICAL)
    except (KeyError, TypeError) as exc:
        return _fail(InputOutputError(f"malformed input: {exc}"), EXIT_IO)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
