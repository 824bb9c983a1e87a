"""Hamiltonian families on the sphere with quartic integrals.

In the coordinates ``(phi, u)`` the base family reads (metric written as
``ds^2``)::

    ds^2 = A^{-1/2} (dphi^2 + A^{-1/2} du^2),
    V    = -(u/2) (a + 2u^2 - 2 A^{1/2}) cos(phi)

and the shifted family multiplies the metric by ``Q = A^{1/2} - u^2 + p``
and divides the potential by it.  The kinetic energy is
``K = 1/2 g^{ij} p_i p_j``.  Near the poles the same systems are written
in Cartesian pole charts via the pole functions, see :mod:`.charts`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import BandChart, ChartedSystem, PoleLink, RadialChart, SystemParams, monotone_inverse
from .errors import BadParams, InadmissibleP
from .jets import Jet
from .quartic_ode import FamilyParams, PoleFunctions, USolution, compute_pole_functions

S_MAX = 4.5
FINDER_WINDOW = (-2.0, 2.0)


def shift_bound(z, a):
    """``f(z) = z - sqrt(1 + a z + z^2)``; ``Q = p - f(u^2)`` for ``b = 1``.

    Evaluated as ``-(1 + a z) / (z + sqrt(1 + a z + z^2))`` to avoid
    cancellation for large ``z``.
    """
    z = np.asarray(z, dtype=float)
    return -(1.0 + a * z) / (z + np.sqrt(1.0 + a * z + z * z))


def shift_bound_limit(a, z=1e6):
    """``f(inf)`` estimated from ``z`` and ``2 z`` by one Richardson step.

    ``f(z) = -a/2 + c/z + O(1/z^2)``, so ``2 f(2z) - f(z)`` removes the
    ``1/z`` term.
    """
    return float(2.0 * shift_bound(2.0 * z, a) - shift_bound(z, a))


@dataclass(frozen=True)
class PRange:
    """Admissible values of the shift ``p`` for a given ``a``.

    ``components`` holds ``(lo, hi, sign)`` open intervals; on a component
    with ``sign = -1`` the system ``-H_p`` is the one with positive kinetic
    energy.
    """

    a: float
    components: tuple

    def sign_for(self, p):
        """Return the sign for ``p``, or raise :class:`InadmissibleP`."""
        for lo, hi, sign in self.components:
            if lo < p < hi:
                return sign
        raise InadmissibleP(f"p={p} not admissible for a={self.a}: need p in {self.describe()}")

    def describe(self):
        def fmt(x):
            return "-inf" if x == -np.inf else ("inf" if x == np.inf else f"{x:g}")

        return " U ".join(f"({fmt(lo)},{fmt(hi)})" for lo, hi, _ in self.components)


def admissible_p(a: float) -> PRange:
    """Shifts ``p`` for which ``Q = A^{1/2} - u^2 + p`` keeps one sign for all ``u``.

    ``Q - p = -f(u^2)`` and ``f`` runs monotonically from ``f(0) = -1`` to
    ``f(inf) = -a/2``, so the boundaries are ``-1`` and ``-a/2``.  Boundary
    values are rejected, and so is ``a = 2``, where both coincide.
    """
    if not a > -2.0 or a == 2.0:
        raise BadParams(f"admissible_p needs a > -2 and a != 2, got a={a}")
    lo, hi = sorted((-1.0, -a / 2.0))
    return PRange(float(a), ((-np.inf, lo, -1), (hi, np.inf, 1)))


def _A_jet(u: Jet, params: FamilyParams) -> Jet:
    return params.b + params.b1 * u + params.a * u * u + u**4


def _split_jets(u: Jet, params: FamilyParams):
    """``A^{1/2}``, ``A``, ``D = A^{1/2} - u^2`` and ``E = a + 2u^2 - 2A^{1/2}``.

    ``D`` and ``E`` are differences of nearly equal terms for large ``|u|``;
    they are evaluated as ``D = (a u^2 + b1 u + b) / (A^{1/2} + u^2)`` and
    ``E = (a D - 2 b - 2 b1 u) / (A^{1/2} + u^2)``, which do not cancel.
    """
    A = _A_jet(u, params)
    rA = A.sqrt()
    u2 = u * u
    S = rA + u2
    D = (params.a * u2 + params.b1 * u + params.b) / S
    E = (params.a * D - 2.0 * params.b - 2.0 * params.b1 * u) / S
    return rA, A, D, E


def base_profiles(params: FamilyParams):
    """Profiles ``(h1, h2, W)`` of the base family in the ``(phi, u)`` chart."""

    def profiles(u):
        rA, A, _, E = _split_jets(u, params)
        return rA, A, -0.5 * u * E

    return profiles


def shifted_profiles(params: FamilyParams, p: float, sign: int):
    def profiles(u):
        rA, A, D, E = _split_jets(u, params)
        Q = (D + p) * float(sign)
        return rA / Q, A / Q, -0.5 * u * E / Q

    return profiles


def _positive_domain(params: FamilyParams):
    """Interval of ``u`` on which ``A > 0``, for the local constructions."""
    roots = np.roots([1.0, 0.0, params.a, params.b1, params.b])
    real = np.sort(roots[np.abs(roots.imag) < 1e-12].real)
    if real.size == 0:
        return (-np.inf, np.inf)
    # the component to the right of the largest root; for b = 0 that is u > 0
    return (float(real[-1]), np.inf)


def _pole_charts(pf: PoleFunctions, p: float | None, sign: int):
    """Pole charts ``N`` and ``S`` from the pole functions."""
    shift = 1.0 + (0.0 if p is None else p)
    if p is None:
        def c0(s):
            return pf.nu(s) ** 2

        def v(s):
            return pf.mu(s)
    else:
        def c0(s):
            return sign * pf.nu(s) ** 2 / (pf.xi(s) + shift)

        def v(s):
            return sign * pf.mu(s) / (pf.xi(s) + shift)

    def zero(s):
        return np.zeros_like(s)

    north = RadialChart.from_functions("N", pf.s_max, c0, zero, v)
    south = RadialChart.from_functions("S", pf.s_max, c0, zero, lambda s: -v(s))
    return north, south


def _pole_links(pf: PoleFunctions, band="band"):
    rmax = float(np.sqrt(pf.s_max))

    def north(rho):
        s = rho * rho
        return -pf.g(s) / rho, pf.nu(s) / s

    def south(rho):
        s = rho * rho
        return pf.g(s) / rho, -pf.nu(s) / s

    def inv(fn):
        def rho_of_u(u):
            return monotone_inverse(fn, 1e-12, rmax * (1 - 1e-12), u)

        return rho_of_u

    return (PoleLink(band, "N", north, inv(north), 1), PoleLink(band, "S", south, inv(south), -1))


def polar_presentation(a: float, pf: PoleFunctions, p: float | None = None, sign: int = 1) -> ChartedSystem:
    """The system written in the two pole charts only.

    Chart ``N`` has inverse metric ``nu(s)^2 I`` (divided by ``xi(s)+p+1``
    when shifted) and potential ``mu(s) X``; chart ``S`` has the same metric
    and the opposite potential, since ``mu(1/s) = -s mu(s)``.
    """
    if pf.a != a:
        raise BadParams(f"pole functions built for a={pf.a}, not a={a}")
    north, south = _pole_charts(pf, p, sign)
    kind = "base" if p is None else "shifted"
    params = SystemParams(kind, float(a), 1.0, p, sign)
    return ChartedSystem(params, {"N": north, "S": south}, poles=("N", "S"))


def build_base(a: float, b: float = 1.0, global_: bool = True, pf: PoleFunctions | None = None) -> ChartedSystem:
    """Base family with chart ``band = (phi, u)`` and pole charts ``N``, ``S``.

    Raises
    ------
    BadParams
        If ``global_`` and not (``b = 1``, ``a > -2``).
    """
    params = FamilyParams(float(a), float(b))
    if global_ and not params.is_global:
        raise BadParams(f"global construction needs b=1 and a>-2, got a={a}, b={b}")
    if not global_ or not params.is_global:
        band = BandChart("band", base_profiles(params), _positive_domain(params))
        return ChartedSystem(SystemParams("base", float(a), float(b), local=True), {"band": band},
                             finder_chart="band", finder_window=FINDER_WINDOW)
    pf = pf or compute_pole_functions(a, s_max=S_MAX)
    band = BandChart("band", base_profiles(params), (-np.inf, np.inf))
    north, south = _pole_charts(pf, None, 1)
    return ChartedSystem(
        SystemParams("base", float(a), float(b)),
        {"band": band, "N": north, "S": south},
        links=_pole_links(pf),
        poles=("N", "S"),
        finder_chart="band",
        finder_window=FINDER_WINDOW,
        extras={"pole_functions": pf},
    )


def build_shifted(a: float, b: float = 1.0, p: float = 0.0, global_: bool = True,
                  pf: PoleFunctions | None = None) -> ChartedSystem:
    """Shifted family; stores ``-H_p`` on the lower admissible component.

    Raises
    ------
    InadmissibleP
        If ``p`` is not admissible for ``a`` (global construction).
    BadParams
        If ``global_`` and not (``b = 1``, ``a > -2``, ``a != 2``).
    """
    params = FamilyParams(float(a), float(b))
    if global_:
        if not params.is_global:
            raise BadParams(f"global construction needs b=1 and a>-2, got a={a}, b={b}")
        sign = admissible_p(a).sign_for(p)
    else:
        sign = 1
    band = BandChart("band", shifted_profiles(params, float(p), sign),
                     (-np.inf, np.inf) if global_ else _positive_domain(params))
    if not global_:
        return ChartedSystem(SystemParams("shifted", float(a), float(b), float(p), sign, local=True),
                             {"band": band}, finder_chart="band", finder_window=FINDER_WINDOW)
    pf = pf or compute_pole_functions(a, s_max=S_MAX)
    north, south = _pole_charts(pf, float(p), sign)
    return ChartedSystem(
        SystemParams("shifted", float(a), float(b), float(p), sign),
        {"band": band, "N": north, "S": south},
        links=_pole_links(pf),
        poles=("N", "S"),
        finder_chart="band",
        finder_window=FINDER_WINDOW,
        extras={"pole_functions": pf},
    )


def build_general(usol: USolution, d: float = 0.0, c: float = 0.0, d1: float = 0.0,
                  p: float | None = None) -> ChartedSystem:
    """Local system in the chart ``(phi, y)`` from a solved ``u(y)``.

    For ``d = 0``::

        ds^2 = (dphi^2 + dy^2) / u'^2,    V = -(u'' - u) u'^2 cos(phi)

    For ``d != 0`` the metric is multiplied by ``Q = u'^2 - u^2 + p`` and the
    potential divided by it, which needs the extra constant ``p``.  The
    constants ``c`` and ``d1`` do not enter the Hamiltonian and are recorded
    only.
    """
    if d != 0.0 and p is None:
        raise BadParams("d != 0 needs the shift p")
    fp = usol.params

    def profiles(y):
        jet = usol(y.v)
        u = Jet(jet.u, jet.u1 * y.d1, jet.u2 * y.d1**2 + jet.u1 * y.d2)
        u1 = Jet(jet.u1, jet.u2 * y.d1, jet.u3 * y.d1**2 + jet.u2 * y.d2)
        u2 = Jet(jet.u2, jet.u3 * y.d1, jet.u4 * y.d1**2 + jet.u3 * y.d2)
        k = u1 * u1
        W = -(u2 - u) * k
        if d != 0.0:
            Q = k - u * u + p
            return k / Q, k / Q, W / Q
        return k, k, W

    band = BandChart("band", profiles, usol.y_range, coords=("phi", "y"))
    sp = SystemParams("general", fp.a, fp.b, p, 1, d, c, d1, usol.u0, tuple(usol.y_range), local=True)
    return ChartedSystem(sp, {"band": band}, finder_chart="band", finder_window=tuple(usol.y_range),
                         extras={"usol": usol})


def gaussian_curvature(sys: ChartedSystem, q, chart: str | None = None):
    """Gaussian curvature of the kinetic metric at ``q`` in a band chart.

    For ``ds^2 = E1(w) dphi^2 + E2(w) dw^2``::

        K = -1/(2 sqrt(E1 E2)) d/dw (E1' / sqrt(E1 E2))
    """
    name = chart or sys.finder_chart or "band"
    ch = sys.chart(name)
    if ch.kind != "band":
        raise BadParams("curvature is evaluated in a band chart")
    h1, h2, _ = ch.jets(np.asarray(q[1], dtype=float))
    E1 = h1.reciprocal()
    E2 = h2.reciprocal()
    r = (E1 * E2).sqrt()
    # d/dw (E1'/r) = E1''/r - E1' r'/r^2
    inner = E1.d2 / r.v - E1.d1 * r.d1 / r.v**2
    return -inner / (2.0 * r.v)


def flat_fixture() -> ChartedSystem:
    """Euclidean metric in a band chart, used to check the curvature code."""

    def profiles(w):
        one = Jet(np.ones_like(w.v), np.zeros_like(w.v), np.zeros_like(w.v))
        return one, one, 0.0 * one

    return ChartedSystem(SystemParams("fixture"), {"band": BandChart("band", profiles, (-np.inf, np.inf))},
                         finder_chart="band")
