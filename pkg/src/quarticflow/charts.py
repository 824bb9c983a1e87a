"""Coordinate charts on the sphere and the systems built from them.

Two kinds of chart are used.

``BandChart``
    Coordinates ``(phi, w)`` with ``phi`` periodic and a diagonal metric
    depending on ``w`` only::

        H = 1/2 (h1(w) p_phi^2 + h2(w) p_w^2) + W(w) cos(phi)

    This is the form in which the families are written down, and the form
    the integral finder works in.  It degenerates at the poles.

``RadialChart``
    Cartesian coordinates ``q = (X, Y)`` around a pole, with

        H = 1/2 (c0(s) |p|^2 + c1(s) (q.p)^2) + v(s) X,    s = |q|^2

    which is regular at ``q = 0``.  Two radial charts ``N`` and ``S`` related
    by the inversion ``q -> (X, -Y) / |q|^2`` cover the sphere.

States move between charts through :meth:`ChartedSystem.convert`; momenta are
transported with the inverse-transpose Jacobian so that the Hamiltonian is
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.optimize import brentq

from . import _kernels
from .errors import DegenerateCoordinate, OutOfChart
from .jets import Jet


@dataclass(frozen=True)
class PhaseState:
    """Chart name, position ``q = (q1, q2)`` and canonical momenta ``p = (p1, p2)``."""

    chart: str
    q: tuple
    p: tuple

    @classmethod
    def from_array(cls, chart, z):
        return cls(chart, (float(z[0]), float(z[1])), (float(z[2]), float(z[3])))

    def as_array(self):
        return np.array([self.q[0], self.q[1], self.p[0], self.p[1]], dtype=float)


class BandChart:
    """Chart ``(phi, w)`` with profiles ``h1, h2, W`` of ``w``.

    Parameters
    ----------
    name : str
    profiles : callable
        Maps a :class:`~quarticflow.jets.Jet` in ``w`` to the jets
        ``(h1, h2, W)``.
    domain : tuple of float
        Open interval of valid ``w``.
    coords : tuple of str
    """

    kind = "band"

    def __init__(self, name, profiles, domain, coords=("phi", "u")):
        self.name = name
        self._profiles = profiles
        self.domain = (float(domain[0]), float(domain[1]))
        self.coords = tuple(coords)

    def jets(self, w):
        return self._profiles(Jet.variable(w))

    def contains(self, q):
        w = np.asarray(q[1])
        return bool(np.all((w > self.domain[0]) & (w < self.domain[1])))

    def _check(self, q):
        if not self.contains(q):
            raise OutOfChart(f"{self.coords[1]} outside {self.domain} in chart {self.name}")

    def metric(self, q):
        """Metric coefficients ``(E1, E2)`` with ``ds^2 = E1 dphi^2 + E2 dw^2``."""
        self._check(q)
        h1, h2, _ = self.jets(q[1])
        return 1.0 / h1.v, 1.0 / h2.v

    def potential(self, q):
        self._check(q)
        _, _, W = self.jets(q[1])
        return W.v * np.cos(q[0])

    def hamiltonian(self, q, p):
        self._check(q)
        h1, h2, W = self.jets(q[1])
        return 0.5 * (h1.v * p[0] ** 2 + h2.v * p[1] ** 2) + W.v * np.cos(q[0])

    def rhs(self, z):
        phi, w, pphi, pw = z
        h1, h2, W = self.jets(w)
        return np.array([
            h1.v * pphi,
            h2.v * pw,
            W.v * np.sin(phi),
            -(0.5 * (h1.d1 * pphi**2 + h2.d1 * pw**2) + W.d1 * np.cos(phi)),
        ])


class RadialChart:
    """Cartesian pole chart with profiles ``c0, c1, v`` of ``s = |q|^2``.

    The profiles are stored as Chebyshev series on ``[0, s_max]``; the chart
    covers ``|q| < sqrt(s_max)``.
    """

    kind = "radial"

    def __init__(self, name, s_max, c0: Chebyshev, c1: Chebyshev, v: Chebyshev):
        self.name = name
        self.s_max = float(s_max)
        self.coords = ("X", "Y")
        self.series = {"c0": c0, "c1": c1, "v": v}
        rows = [c0, c0.deriv(), c1, c1.deriv(), v, v.deriv()]
        width = max(len(r.coef) for r in rows)
        self.packed = np.zeros((6, width))
        for i, r in enumerate(rows):
            self.packed[i, : len(r.coef)] = r.coef

    @classmethod
    def from_functions(cls, name, s_max, c0, c1, v, deg=32, max_deg=1024, tol=1e-13):
        """Interpolate vectorized profile functions with an adaptively chosen degree."""
        dom = [0.0, s_max]
        out = []
        for fn in (c0, c1, v):
            n = deg
            while True:
                ser = Chebyshev.interpolate(fn, n, domain=dom)
                scale = np.abs(ser.coef).max()
                if np.abs(ser.coef[-3:]).max() <= tol * scale or n >= max_deg:
                    break
                n *= 2
            out.append(ser.trim(tol * scale * 1e-2) if scale > 0.0 else Chebyshev([0.0], domain=dom))
        return cls(name, s_max, *out)

    @property
    def rho_max(self):
        return float(np.sqrt(self.s_max))

    def contains(self, q):
        s = np.asarray(q[0]) ** 2 + np.asarray(q[1]) ** 2
        return bool(np.all(s < self.s_max))

    def _check(self, q):
        if not self.contains(q):
            raise OutOfChart(f"|q| >= {self.rho_max:.4g} in chart {self.name}")

    def profile(self, name, s, deriv=0):
        ser = self.series[name]
        return (ser.deriv(deriv) if deriv else ser)(s)

    def inverse_metric(self, q):
        """Inverse metric matrix ``c0 I + c1 q q^T`` at ``q``."""
        self._check(q)
        q = np.asarray(q, dtype=float)
        s = q @ q
        return self.profile("c0", s) * np.eye(2) + self.profile("c1", s) * np.outer(q, q)

    def metric_matrix(self, q):
        return np.linalg.inv(self.inverse_metric(q))

    def potential(self, q):
        self._check(q)
        s = np.asarray(q[0]) ** 2 + np.asarray(q[1]) ** 2
        return self.profile("v", s) * np.asarray(q[0])

    def hamiltonian(self, q, p):
        self._check(q)
        X, Y = (np.asarray(c, dtype=float) for c in q)
        pX, pY = (np.asarray(c, dtype=float) for c in p)
        s = X * X + Y * Y
        qp = X * pX + Y * pY
        return (0.5 * (self.profile("c0", s) * (pX * pX + pY * pY) + self.profile("c1", s) * qp * qp)
                + self.profile("v", s) * X)

    def rhs(self, z):
        out = np.empty(4)
        _kernels.radial_rhs(self.packed, self.s_max, np.asarray(z, dtype=float), out)
        return out


def invert_radial(z):
    """Map a state between the two pole charts; the map is its own inverse."""
    X, Y, pX, pY = z
    s = X * X + Y * Y
    if s == 0.0:
        raise DegenerateCoordinate("the pole of one chart is not in the other")
    Xt, Yt = X / s, -Y / s
    # q = T(qt) with the same formula; p_t = DT(qt)^T p
    st = Xt * Xt + Yt * Yt
    J = np.array([[1.0, 0.0], [0.0, -1.0]]) @ (np.eye(2) / st - 2.0 * np.outer([Xt, Yt], [Xt, Yt]) / st**2)
    pt = J.T @ np.array([pX, pY])
    return np.array([Xt, Yt, pt[0], pt[1]])


@dataclass(frozen=True)
class PoleLink:
    """Relation between a band chart and a pole chart.

    ``w = w_of_rho(rho)`` along rays and ``phi = orientation * angle(q)``.
    ``w_of_rho`` returns ``(w, dw/drho)``; ``rho_of_w`` is its inverse.
    """

    band: str
    radial: str
    w_of_rho: object
    rho_of_w: object
    orientation: int = 1


def band_to_radial(z, link: PoleLink):
    phi, w, pphi, pw = z
    rho = link.rho_of_w(w)
    if rho <= 0.0:
        raise DegenerateCoordinate("band chart point maps to the pole")
    _, dw = link.w_of_rho(rho)
    th = link.orientation * phi
    pth = link.orientation * pphi
    prho = pw * dw
    c, s = np.cos(th), np.sin(th)
    return np.array([rho * c, rho * s, c * prho - s * pth / rho, s * prho + c * pth / rho])


def radial_to_band(z, link: PoleLink):
    X, Y, pX, pY = z
    rho = np.hypot(X, Y)
    if np.any(rho == 0.0):
        raise DegenerateCoordinate("the pole is a singular point of the band chart")
    th = np.arctan2(Y, X)
    w, dw = link.w_of_rho(rho)
    pth = X * pY - Y * pX
    prho = (X * pX + Y * pY) / rho
    return np.array([link.orientation * th, w, link.orientation * pth, prho / dw])


def monotone_inverse(fn, lo, hi, target):
    """Solve ``fn(rho)[0] = target`` for ``rho`` in ``[lo, hi]`` (``fn`` monotone)."""
    flo, fhi = fn(lo)[0] - target, fn(hi)[0] - target
    if flo * fhi > 0.0:
        raise OutOfChart(f"value {target:.6g} not reached on rho in [{lo:.3g}, {hi:.3g}]")
    return brentq(lambda r: fn(r)[0] - target, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class SystemParams:
    """Parameter record of a charted system.

    ``kind`` is one of ``base``, ``shifted``, ``general``, ``kovalevskaya``
    or ``fixture``.  ``sign = -1`` means the stored Hamiltonian is ``-H_p``.
    """

    kind: str
    a: float = 0.0
    b: float = 1.0
    p: float | None = None
    sign: int = 1
    d: float | None = None
    c: float | None = None
    d1: float | None = None
    u0: float | None = None
    y_range: tuple | None = None
    local: bool = False

    def as_dict(self):
        out = {"kind": self.kind, "a": self.a, "b": self.b, "p": self.p, "sign": self.sign}
        for k in ("d", "c", "d1", "u0"):
            if getattr(self, k) is not None:
                out[k] = getattr(self, k)
        if self.y_range is not None:
            out["y_range"] = list(self.y_range)
        out["local"] = self.local
        return out


@dataclass(frozen=True)
class ChartedSystem:
    """A conservative system described in several charts.

    Attributes
    ----------
    params : SystemParams
    charts : dict
        Chart name to :class:`BandChart` or :class:`RadialChart`.
    links : tuple of PoleLink
    poles : tuple of str or None
        Names of the two radial charts forming the atlas, north first.
    finder_chart : str
        Band chart used for integral reconstruction.
    finder_window : tuple of float
        Default collocation window in the finder chart's ``w``.
    """

    params: SystemParams
    charts: dict
    links: tuple = ()
    poles: tuple | None = None
    finder_chart: str | None = None
    finder_window: tuple | None = None
    extras: dict = field(default_factory=dict)

    def chart(self, name):
        try:
            return self.charts[name]
        except KeyError:
            raise OutOfChart(f"no chart named {name!r}") from None

    def hamiltonian(self, state: PhaseState):
        return float(self.chart(state.chart).hamiltonian(state.q, state.p))

    def _link(self, band, radial):
        for lk in self.links:
            if lk.band == band and lk.radial == radial:
                return lk
        return None

    def convert(self, state: PhaseState, target: str) -> PhaseState:
        """Express ``state`` in chart ``target``.

        Raises
        ------
        OutOfChart
            If the point is outside the target chart.
        DegenerateCoordinate
            If the point is a coordinate singularity of the target chart.
        """
        if state.chart == target:
            return state
        src = self.chart(state.chart)
        dst = self.chart(target)
        z = state.as_array()
        if src.kind == "band":
            z, via = self._band_to_atlas(state.chart, z, prefer=target if dst.kind == "radial" else None)
        else:
            via = state.chart
        if dst.kind == "radial":
            if via != target:
                z = invert_radial(z)
            if not dst.contains(z[:2]):
                raise OutOfChart(f"state not inside chart {target}")
            return PhaseState.from_array(target, z)
        lk = self._link(target, via)
        if lk is None:
            other = [n for n in self.poles if n != via][0]
            z = invert_radial(z)
            via = other
            lk = self._link(target, via)
        out = radial_to_band(z, lk)
        if not dst.contains(out[:2]):
            raise OutOfChart(f"state not inside chart {target}")
        return PhaseState.from_array(target, out)

    def _band_to_atlas(self, band, z, prefer=None):
        cands = [lk for lk in self.links if lk.band == band]
        if not cands:
            raise OutOfChart(f"chart {band} is not linked to a pole chart")
        if prefer is not None:
            cands.sort(key=lambda lk: lk.radial != prefer)
        errors = []
        best = None
        for lk in cands:
            try:
                zr = band_to_radial(z, lk)
            except (OutOfChart, DegenerateCoordinate) as exc:
                errors.append(str(exc))
                continue
            if best is None or np.hypot(zr[0], zr[1]) < np.hypot(best[0][0], best[0][1]):
                best = (zr, lk.radial)
            if prefer is not None and lk.radial == prefer and np.hypot(zr[0], zr[1]) < self.chart(prefer).rho_max:
                return zr, lk.radial
        if best is None:
            raise OutOfChart("; ".join(errors))
        return best

    def to_atlas(self, state: PhaseState) -> PhaseState:
        """Express ``state`` in the pole chart whose pole is nearest."""
        if self.poles is None:
            raise OutOfChart("system has no pole charts")
        if state.chart in self.poles:
            z = state.as_array()
            if z[0] ** 2 + z[1] ** 2 <= 1.0:
                return state
            other = [n for n in self.poles if n != state.chart][0]
            return PhaseState.from_array(other, invert_radial(z))
        z, via = self._band_to_atlas(state.chart, state.as_array())
        if z[0] ** 2 + z[1] ** 2 > 1.0:
            other = [n for n in self.poles if n != via][0]
            z, via = invert_radial(z), other
        return PhaseState.from_array(via, z)
