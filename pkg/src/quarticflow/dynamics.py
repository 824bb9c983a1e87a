"""Symplectic integration on a charted system.

The Hamiltonians are not separable (the metric depends on position), so the
implicit midpoint rule is used; its nonlinear stage equation is solved by
fixed-point iteration.  ``scheme="midpoint4"`` composes three midpoint steps
with the Yoshida triple-jump weights, giving a fourth-order symplectic method
built from the same stage.

Trajectories run in the two pole charts.  When ``|q|`` exceeds the upper edge
of the switch band the state is carried to the opposite chart, where it lands
at ``|q| = 1/|q|``, inside the band.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .charts import ChartedSystem, PhaseState, invert_radial, radial_to_band
from .errors import BadParams, IntegrationFailure, NewtonDivergence, OutOfChart

SCHEMES = ("implicit_midpoint", "midpoint4")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    scheme: str = "implicit_midpoint"
    newton_tol: float = 1e-15
    max_newton_iters: int = 60
    switch_band: tuple = (0.5, 2.0)

    def __post_init__(self):
        if not self.dt > 0.0:
            raise BadParams("dt must be positive")
        if self.scheme not in SCHEMES:
            raise BadParams(f"scheme must be one of {SCHEMES}")
        lo, hi = self.switch_band
        if not 0.0 < lo < 1.0 < hi:
            raise BadParams("switch band must satisfy 0 < r_low < 1 < r_high")

    def as_dict(self):
        return {"dt": self.dt, "scheme": self.scheme, "newton_tol": self.newton_tol,
                "max_newton_iters": self.max_newton_iters, "switch_band": list(self.switch_band)}


@dataclass(frozen=True)
class SwitchEvent:
    t: float
    source: str
    target: str
    H_before: float
    H_after: float


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory: times, chart names, states ``(q1, q2, p1, p2)`` and ``H``."""

    t: np.ndarray
    chart: np.ndarray
    z: np.ndarray
    H: np.ndarray
    switches: list = field(default_factory=list)
    config: IntegratorConfig | None = None

    def __len__(self):
        return len(self.t)

    def state(self, i) -> PhaseState:
        return PhaseState.from_array(str(self.chart[i]), self.z[i])

    def energy_error(self):
        """``max |H(t) - H(0)| / |H(0)|``."""
        return float(np.max(np.abs(self.H - self.H[0])) / abs(self.H[0]))


def eval_H(sys: ChartedSystem, s: PhaseState) -> float:
    """``H = K + V`` at ``s``; raises :class:`OutOfChart` outside the chart."""
    return sys.hamiltonian(s)


def _python_midpoint(rhs, z0, h, tol, max_iter):
    z1 = z0 + h * rhs(z0)
    scale = max(1.0, np.abs(z0).max())
    for it in range(1, max_iter + 1):
        new = z0 + h * rhs(0.5 * (z0 + z1))
        if not np.all(np.isfinite(new)):
            break
        delta = np.abs(new - z1).max()
        z1 = new
        if delta <= tol * scale:
            return z1, it
    return None, -1


def _python_step(chart, z, h, cfg):
    weights = (1.0,) if cfg.scheme == "implicit_midpoint" else (
        _kernels.YOSHIDA_1, _kernels.YOSHIDA_0, _kernels.YOSHIDA_1)
    for w in weights:
        z, it = _python_midpoint(chart.rhs, z, w * h, cfg.newton_tol, cfg.max_newton_iters)
        if it < 0:
            return None
    return z


def step(sys: ChartedSystem, s: PhaseState, cfg: IntegratorConfig, dt: float | None = None) -> PhaseState:
    """One step of the configured scheme in the chart of ``s``.

    Raises
    ------
    NewtonDivergence
        If the stage equation does not converge to ``newton_tol``.
    """
    h = cfg.dt if dt is None else dt
    chart = sys.chart(s.chart)
    z = s.as_array()
    if chart.kind == "radial":
        states, n, flag, _ = _kernels.radial_run(chart.packed, chart.s_max, z, h, 1, np.inf,
                                                  cfg.newton_tol, cfg.max_newton_iters,
                                                  cfg.scheme == "midpoint4")
        if flag == _kernels.RUN_DIVERGED:
            raise NewtonDivergence("midpoint stage did not converge", partial=s)
        z1 = states[1]
    else:
        z1 = _python_step(chart, z, h, cfg)
        if z1 is None:
            raise NewtonDivergence("midpoint stage did not converge", partial=s)
    return PhaseState.from_array(s.chart, z1)


def _energies(sys, charts, z):
    H = np.empty(len(z))
    for name in np.unique(charts):
        sel = charts == name
        H[sel] = sys.chart(str(name)).hamiltonian((z[sel, 0], z[sel, 1]), (z[sel, 2], z[sel, 3]))
    return H


def integrate(sys: ChartedSystem, s0: PhaseState, T: float, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate from ``s0`` over ``[0, T]`` (``T < 0`` integrates backwards).

    If the system has pole charts the state is first moved to the nearer
    pole chart and all samples are recorded there.

    Raises
    ------
    NewtonDivergence
        With the trajectory up to the failure in ``partial``.
    """
    cfg = cfg or IntegratorConfig()
    n_steps = int(round(abs(T) / cfg.dt))
    h = np.copysign(cfg.dt, T) if T != 0 else cfg.dt
    if sys.poles is not None:
        return _integrate_atlas(sys, sys.to_atlas(s0), n_steps, h, cfg)
    return _integrate_band(sys, s0, n_steps, h, cfg)


def _finish(sys, ts, charts, zs, switches, cfg):
    t = np.concatenate(ts)
    ch = np.concatenate(charts)
    z = np.concatenate(zs)
    return Trajectory(t, ch, z, _energies(sys, ch, z), switches, cfg)


def _integrate_atlas(sys, s0, n_steps, h, cfg):
    r_high = cfg.switch_band[1]
    name = s0.chart
    z = s0.as_array()
    ts, charts, zs = [np.array([0.0])], [np.array([name])], [z[None, :]]
    switches = []
    done = 0
    order4 = cfg.scheme == "midpoint4"
    while done < n_steps:
        chart = sys.chart(name)
        if r_high >= chart.rho_max:
            raise BadParams(f"switch radius {r_high} outside chart {name} (radius {chart.rho_max:.4g})")
        states, n, flag, _ = _kernels.radial_run(chart.packed, chart.s_max, z, h, n_steps - done, r_high,
                                                  cfg.newton_tol, cfg.max_newton_iters, order4)
        seg = states[1 : n + 1]
        ts.append(h * (done + 1 + np.arange(n)))
        charts.append(np.full(n, name))
        zs.append(seg)
        done += n
        if flag == _kernels.RUN_DIVERGED:
            partial = _finish(sys, ts, charts, zs, switches, cfg)
            raise NewtonDivergence(f"midpoint stage did not converge at t={h * done:.6g}", partial=partial)
        if flag == _kernels.RUN_OUTSIDE:
            raise OutOfChart(f"state left chart {name} at t={h * done:.6g}")
        if flag == _kernels.RUN_SWITCH:
            other = [c for c in sys.poles if c != name][0]
            H_before = float(chart.hamiltonian(seg[-1, :2], seg[-1, 2:]))
            z = invert_radial(seg[-1])
            H_after = float(sys.chart(other).hamiltonian(z[:2], z[2:]))
            switches.append(SwitchEvent(h * done, name, other, H_before, H_after))
            charts[-1][-1] = other
            zs[-1][-1] = z
            name = other
        else:
            z = seg[-1].copy()
    return _finish(sys, ts, charts, zs, switches, cfg)


def _integrate_band(sys, s0, n_steps, h, cfg):
    chart = sys.chart(s0.chart)
    z = s0.as_array()
    out = np.empty((n_steps + 1, 4))
    out[0] = z
    for n in range(n_steps):
        z = _python_step(chart, z, h, cfg)
        if z is None or not chart.contains(z[:2]):
            partial = _finish(sys, [h * np.arange(n + 1)], [np.full(n + 1, s0.chart)], [out[: n + 1]], [], cfg)
            if z is None:
                raise NewtonDivergence(f"midpoint stage did not converge at t={h * n:.6g}", partial=partial)
            raise OutOfChart(f"state left chart {s0.chart} at t={h * (n + 1):.6g}")
        out[n + 1] = z
    return _finish(sys, [h * np.arange(n_steps + 1)], [np.full(n_steps + 1, s0.chart)], [out], [], cfg)


@dataclass(frozen=True)
class Section:
    """Surface ``z[index] = value`` crossed in ``direction`` (+1, -1 or 0 for both)."""

    coordinate: str
    value: float
    direction: int = 1
    chart: str | None = None

    @property
    def index(self):
        return {"q1": 0, "q2": 1, "p1": 2, "p2": 3}[self.coordinate]


def in_chart(sys: ChartedSystem, traj: Trajectory, chart: str) -> np.ndarray:
    """Trajectory states expressed in ``chart`` (array of shape ``(n, 4)``).

    Pole-chart samples are carried to a band chart through the system's
    links, and to the other pole chart by the involution.
    """
    z = np.empty_like(traj.z)
    target = sys.chart(chart)
    for name in np.unique(traj.chart):
        sel = traj.chart == name
        name = str(name)
        zs = traj.z[sel]
        if name == chart:
            z[sel] = zs
        elif target.kind == "radial":
            if name not in (sys.poles or ()):
                raise OutOfChart(f"cannot carry samples from {name} to {chart}")
            z[sel] = np.array([invert_radial(row) for row in zs])
        else:
            lk = sys._link(chart, name)
            if lk is None:
                raise OutOfChart(f"no link from {name} to {chart}")
            z[sel] = radial_to_band(zs.T, lk).T
    return z


def poincare(sys: ChartedSystem, traj: Trajectory, section: Section):
    """Crossings of ``section`` as a list of ``(t, PhaseState)``.

    The trajectory is expressed in the section's chart, consecutive samples
    bracketing the surface are interpolated linearly and the result is moved
    onto the surface by one Euler step along the flow.  For the angle ``q1``
    of a band chart the surface is taken modulo ``2 pi``; steps whose angle
    jumps by more than ``pi / 2`` (passages near a pole) are skipped.
    """
    if len(traj) == 0:
        return []
    name = section.chart or str(traj.chart[0])
    chart = sys.chart(name)
    z_all = in_chart(sys, traj, name) if np.any(traj.chart != name) else traj.z
    k = section.index
    periodic = chart.kind == "band" and k == 0
    out = []
    for i in range(len(traj) - 1):
        za, zb = z_all[i], z_all[i + 1].copy()
        a, b = za[k], zb[k]
        if periodic:
            step = (b - a + np.pi) % (2 * np.pi) - np.pi
            if abs(step) > np.pi / 2:
                continue
            b = a + step
            zb[k] = b
            fa = np.floor((a - section.value) / (2 * np.pi))
            fb = np.floor((b - section.value) / (2 * np.pi))
            if fa == fb:
                continue
            target = section.value + 2 * np.pi * max(fa, fb)
        else:
            target = section.value
            if (a - target) * (b - target) > 0.0 or a == b:
                continue
            if (a - target) == 0.0 and i > 0:
                continue
        rising = b > a
        if section.direction and (rising != (section.direction > 0)):
            continue
        lam = (target - a) / (b - a)
        z = (1 - lam) * za + lam * zb
        t = (1 - lam) * traj.t[i] + lam * traj.t[i + 1]
        f = chart.rhs(z)
        if f[k] != 0.0:
            dt = (target - z[k]) / f[k]
            z = z + dt * f
            t = t + dt
        if periodic:
            z[k] = section.value
        out.append((float(t), PhaseState.from_array(name, z)))
    return out


def energy_drift(traj: Trajectory) -> float:
    return traj.energy_error()


def ensure_finite(traj: Trajectory):
    if not np.all(np.isfinite(traj.z)):
        raise IntegrationFailure("non-finite state in trajectory")
    return traj
