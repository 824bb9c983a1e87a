"""The quartic first-order ODE ``u'^4 = b + b1*u + a*u^2 + u^4`` and its pole functions.

Solutions of the ODE are the profile functions from which the Hamiltonian
families are built.  This module provides

* the algebraic closure ``u -> (u, u', u'', u''', u'''')`` (:func:`jet_from_u`),
* an adaptive global solve ``y -> u(y)`` (:func:`solve_u`),
* the smooth functions ``g, nu, mu, xi`` of ``s = exp(-2y)`` that describe the
  behaviour of the metric and the potential at the poles of the sphere
  (:func:`compute_pole_functions`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import solve_ivp

from .errors import BadParams, IntegrationFailure, NonPositiveA, SingularA

SCHEMA = 1


@dataclass(frozen=True)
class FamilyParams:
    """Coefficients of ``A(u) = b + b1*u + a*u^2 + u^4`` and the branch of the root."""

    a: float
    b: float = 1.0
    b1: float = 0.0
    branch: int = 1

    def __post_init__(self):
        if self.branch not in (1, -1):
            raise BadParams(f"branch must be +1 or -1, got {self.branch}")

    @property
    def is_global(self):
        """True for the parameters that give a smooth system on the whole sphere."""
        return self.b == 1.0 and self.b1 == 0.0 and self.a > -2.0

    def A(self, u):
        return quartic_rhs(u, self)

    def dA(self, u):
        return self.b1 + 2.0 * self.a * u + 4.0 * u**3

    def as_dict(self):
        return {"a": self.a, "b": self.b, "b1": self.b1, "branch": self.branch}


@dataclass(frozen=True)
class UJet:
    """Value and first four ``y``-derivatives of a solution ``u``."""

    u: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    u4: np.ndarray

    def as_tuple(self):
        return (self.u, self.u1, self.u2, self.u3, self.u4)


def quartic_rhs(u, params: FamilyParams):
    """Return ``A(u) = b + b1*u + a*u^2 + u^4``."""
    u = np.asarray(u, dtype=float) if not np.isscalar(u) else float(u)
    return params.b + params.b1 * u + params.a * u**2 + u**4


def jet_from_u(u, params: FamilyParams) -> UJet:
    """Close the ODE algebraically at the point ``u``.

    ``u' = branch * A^(1/4)``, and the higher derivatives follow from
    differentiating ``u'^4 = A(u)`` and the third-order equation
    ``2u''^2 - 3u^2 + u'u''' = a/2``.

    Raises
    ------
    NonPositiveA
        If ``A(u) <= 0`` anywhere, where the closure is singular.
    """
    u = np.asarray(u, dtype=float)
    A = quartic_rhs(u, params)
    if np.any(A <= 0.0):
        raise NonPositiveA(f"A(u) <= 0 at u={u[A <= 0.0].ravel()[:3]} for {params}")
    u1 = params.branch * A**0.25
    u2 = params.dA(u) / (4.0 * u1**2)
    u3 = (0.5 * params.a + 3.0 * u**2 - 2.0 * u2**2) / u1
    u4 = (6.0 * u * u1 - 5.0 * u2 * u3) / u1
    return UJet(u, u1, u2, u3, u4)


def residual_eq4(jet: UJet, a: float):
    """Residual of the third-order equation ``2u''^2 - 3u^2 + u'u''' - a/2``."""
    return 2.0 * jet.u2**2 - 3.0 * jet.u**2 + jet.u1 * jet.u3 - 0.5 * a


@dataclass(frozen=True)
class USolution:
    """A numerically solved ``u(y)`` on ``y_range`` with ``u(0) = u0``.

    Calling the object returns the closed :class:`UJet` at the given ``y``.
    """

    params: FamilyParams
    u0: float
    y_range: tuple
    tol: float
    _forward: object = field(repr=False, default=None)
    _backward: object = field(repr=False, default=None)

    def u(self, y):
        y = np.asarray(y, dtype=float)
        lo, hi = self.y_range
        if np.any(y < lo - 1e-12) or np.any(y > hi + 1e-12):
            raise ValueError(f"y outside solved range {self.y_range}")
        yy = np.atleast_1d(y)
        out = np.full(yy.shape, self.u0)
        fwd = yy > 0.0
        bwd = yy < 0.0
        if np.any(fwd):
            out[fwd] = self._forward(yy[fwd])[0]
        if np.any(bwd):
            out[bwd] = self._backward(yy[bwd])[0]
        return out.reshape(y.shape)[()] if y.ndim == 0 else out

    def __call__(self, y) -> UJet:
        return jet_from_u(self.u(y), self.params)

    def grid(self, n=201):
        y = np.linspace(self.y_range[0], self.y_range[1], n)
        return y, self.u(y)

    def to_dict(self, n=201):
        y, u = self.grid(n)
        return {
            "schema": SCHEMA,
            "type": "USolution",
            **self.params.as_dict(),
            "u0": self.u0,
            "tol": self.tol,
            "y_range": list(self.y_range),
            "grid": {"y": y.tolist(), "u": u.tolist()},
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("schema") != SCHEMA or data.get("type") != "USolution":
            raise ValueError("not a USolution record")
        params = FamilyParams(data["a"], data["b"], data["b1"], data["branch"])
        return solve_u(params, data["u0"], tuple(data["y_range"]), data["tol"])


def solve_u(params: FamilyParams, u0: float = 0.0, y_range=(-5.0, 5.0), tol: float = 1e-12) -> USolution:
    """Integrate ``u' = branch * A(u)^(1/4)`` from ``u(0) = u0`` over ``y_range``.

    An explicit 8th-order Dormand-Prince scheme with dense output is used;
    ``A^(1/4)`` is smooth wherever ``A > 0``.

    Raises
    ------
    SingularA
        If ``A(u0) <= 0`` or the solution reaches ``A = 0`` inside the range.
    """
    lo, hi = float(y_range[0]), float(y_range[1])
    if lo > hi:
        raise ValueError("y_range must be increasing")
    if quartic_rhs(u0, params) <= 0.0:
        raise SingularA(f"A(u0) = {quartic_rhs(u0, params):g} <= 0 at u0={u0}")

    def rhs(_, y):
        A = quartic_rhs(y[0], params)
        return [params.branch * max(A, 0.0) ** 0.25]

    def hits_zero(_, y):
        return quartic_rhs(y[0], params)

    hits_zero.terminal = True

    def run(end):
        if end == 0.0:
            return None
        res = solve_ivp(
            rhs, (0.0, end), [u0], method="DOP853", rtol=tol, atol=tol,
            dense_output=True, events=hits_zero,
        )
        if res.status == 1:
            raise SingularA(f"A(u(y)) reached 0 near y={res.t_events[0][0]:.6g}")
        if res.status != 0:
            raise IntegrationFailure(res.message)
        return res.sol

    return USolution(params, float(u0), (lo, hi), tol, run(max(hi, 0.0)), run(min(lo, 0.0)))


# ---------------------------------------------------------------------------
# pole functions


def theta(s, g, a):
    """Right-hand side of the ODE for ``g(s) = sqrt(s) * u(-log(s)/2)`` (b = 1, b1 = 0).

    With ``R = (s^2 + a*s*g^2 + g^4)^(1/4)`` one has ``g - 2 s g' = R``, which is
    rearranged into the form below so that it stays regular at ``s = 0``.
    """
    R = (s * s + a * s * g * g + g**4) ** 0.25
    return -(s + a * g * g) / (2.0 * (R + g) * (R * R + g * g))


def _nu_from_g(s, g, a):
    return (s * s + a * s * g * g + g**4) ** 0.25


def _mu_from_g(s, g, a):
    # u'^2 (u'' - u) = e^{-y} mu(e^{-2y}); this form has no 0/0 at s = 0
    R2 = np.sqrt(s * s + a * s * g * g + g**4)
    S = g * g + R2
    return -g * (2.0 * S - a * (s + a * g * g)) / (2.0 * S * S)


def xi_closed_form(s, g, a):
    """``xi(s) = u'^2 - u^2 - 1`` written in terms of ``g``; used as an independent check."""
    R2 = np.sqrt(s * s + a * s * g * g + g**4)
    return (s + a * g * g) / (R2 + g * g) - 1.0


@dataclass(frozen=True)
class PoleFunctions:
    """Smooth functions ``g, nu, mu, xi`` of ``s`` on ``[0, s_max]``.

    They satisfy, for the odd solution ``u`` with ``u(0) = 0``,

    * ``u(y) = e^y g(e^{-2y})``
    * ``u'(y) = e^y nu(e^{-2y}) = e^{-y} nu(e^{2y})``
    * ``u'^2 (u'' - u) = e^{-y} mu(e^{-2y}) = -e^{y} mu(e^{2y})``
    * ``xi(t) = int_t^1 mu/nu ds``

    Each function is held as a Chebyshev interpolant (``g`` through
    ``h = g / (s - 1)``); ``deriv`` selects a derivative with respect to ``s``.
    """

    a: float
    s_max: float
    tol: float
    series: dict
    s_min: float = 1e-8

    def _eval(self, name, s, deriv):
        c = self.series[name]
        if deriv:
            c = c.deriv(deriv)
        return c(s)

    def g(self, s, deriv=0):
        # g = (s - 1) h, so that g(1) = 0 holds exactly
        s = np.asarray(s, dtype=float)
        h = self.series["h"]
        if deriv == 0:
            return (s - 1.0) * h(s)
        return deriv * h.deriv(deriv - 1)(s) + (s - 1.0) * h.deriv(deriv)(s)

    def nu(self, s, deriv=0):
        return self._eval("nu", s, deriv)

    def mu(self, s, deriv=0):
        return self._eval("mu", s, deriv)

    def xi(self, s, deriv=0):
        return self._eval("xi", s, deriv)

    def to_dict(self):
        return {
            "schema": SCHEMA,
            "type": "PoleFunctions",
            "a": self.a,
            "b": 1.0,
            "b1": 0.0,
            "u0": 0.0,
            "tol": self.tol,
            "s_max": self.s_max,
            "s_min": self.s_min,
            "grid": {k: c.coef.tolist() for k, c in self.series.items()},
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("schema") != SCHEMA or data.get("type") != "PoleFunctions":
            raise ValueError("not a PoleFunctions record")
        dom = [0.0, data["s_max"]]
        series = {k: Chebyshev(np.asarray(v), domain=dom) for k, v in data["grid"].items()}
        return cls(data["a"], data["s_max"], data["tol"], series, data["s_min"])


def compute_pole_functions(a: float, n_grid: int = 96, tol: float = 1e-13, s_max: float = 4.5,
                           s_min: float = 1e-8, max_grid: int = 768) -> PoleFunctions:
    """Build :class:`PoleFunctions` for ``b = 1``, ``b1 = 0`` and parameter ``a``.

    The ``g``-ODE is integrated from ``g(1) = 0`` down to ``s_min`` and up to
    ``s_max``; on ``[0, s_min]`` ``g`` is continued by the quartic through the
    five nearest samples.  The interpolation degree starts at ``n_grid`` and
    is doubled until the trailing Chebyshev coefficients fall below ``1e-13``
    (or ``max_grid`` is reached).  ``xi`` is the exact integral of the
    interpolant of ``mu / nu``.

    Raises
    ------
    BadParams
        For ``a <= -2``.
    IntegrationFailure
        If the adaptive solve does not converge.
    """
    if not a > -2.0:
        raise BadParams(f"pole functions need a > -2, got a={a}")

    def rhs(s, y):
        return [theta(s, y[0], a)]

    sols = {}
    for end in (s_min, s_max):
        res = solve_ivp(rhs, (1.0, end), [0.0], method="DOP853", rtol=tol, atol=tol * 1e-2,
                        dense_output=True)
        if res.status != 0:
            raise IntegrationFailure(f"g-ODE failed towards s={end}: {res.message}")
        sols[end] = res.sol

    ext_s = s_min * (1.0 + np.arange(5))
    ext = np.polynomial.Polynomial.fit(ext_s, sols[s_min](ext_s)[0], 4)

    def g_samples(s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        low = s < s_min
        mid = (s >= s_min) & (s <= 1.0)
        high = s > 1.0
        out[low] = ext(s[low])
        out[mid] = sols[s_min](s[mid])[0]
        out[high] = sols[s_max](s[high])[0]
        out[s == 1.0] = 0.0
        return out

    def h_samples(s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        near = s == 1.0
        out[~near] = g_samples(s[~near]) / (s[~near] - 1.0)
        out[near] = theta(1.0, 0.0, a)
        return out

    dom = [0.0, s_max]
    n = n_grid
    while True:
        h = Chebyshev.interpolate(h_samples, n - 1, domain=dom)
        nu = Chebyshev.interpolate(lambda s: _nu_from_g(s, g_samples(s), a), n - 1, domain=dom)
        mu = Chebyshev.interpolate(lambda s: _mu_from_g(s, g_samples(s), a), n - 1, domain=dom)
        q = Chebyshev.interpolate(lambda s: _mu_from_g(s, g_samples(s), a) / _nu_from_g(s, g_samples(s), a),
                                  n - 1, domain=dom)
        tail = max(np.abs(c.coef[-4:]).max() / max(np.abs(c.coef).max(), 1.0) for c in (h, nu, mu, q))
        if tail < 1e-13 or n >= max_grid:
            break
        n *= 2
    # xi(t) = int_t^1 mu/nu ds, integrated exactly on the interpolant
    xi = -q.integ(lbnd=1.0)
    return PoleFunctions(float(a), float(s_max), float(tol), {"h": h, "nu": nu, "mu": mu, "xi": xi},
                         float(s_min))
