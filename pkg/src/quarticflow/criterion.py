"""Fourth-order integrability criterion in Wirtinger form.

For a conformal metric ``lambda (dphi^2 + dy^2)`` with ``lambda = f_{z zbar}``,
``z = phi + i y``, the geodesic flow has a quartic integral when

    Im( f_zzzz f_zzbar + 3 f_zzz f_zzzbar + 2 f_zz f_zzzzbar ) = 0.

The ansatz ``f = u(y) cos(phi) + xi(y) + d (phi^2 - y^2)`` is evaluated with
``u`` from the quartic ODE and ``xi''`` from one of two closures::

    d = 0 :  xi'' = (d1 u + c) / u'^2
    d != 0:  xi'' = 2d (u'^2 - u^2 + d1/(2d) u + p) / u'^2

Both are ``xi'' = alpha + P(u)/u'^2`` with a quadratic ``P``; ``xi'''`` and
``xi''''`` follow by the chain rule through the ODE jet.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import comb

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BadParams
from .quartic_ode import FamilyParams, quartic_rhs

D_ZERO = "d_zero"
D_NONZERO = "d_nonzero"


@dataclass(frozen=True)
class FAnsatz:
    """The ansatz ``u cos(phi) + xi + d (phi^2 - y^2)`` or a raw function.

    Parameters
    ----------
    u_provider : callable
        ``y -> UJet``; typically a :class:`~quarticflow.quartic_ode.USolution`.
    xi_mode : {"d_zero", "d_nonzero"}
    d, c, d1, p : float
        Closure constants.
    raw : callable, optional
        ``(phi, y) -> {(i, j): d^{i+j} f / dphi^i dy^j}`` for ``i + j <= 4``;
        when given, the other fields are ignored.
    perturb : dict
        Test hooks: ``xi_offset`` is added to ``xi''``; ``xi_scale``
        multiplies the ``d``-terms of the ``xi''`` closure; ``a_scale``
        multiplies ``a`` inside the jet closure.
    """

    u_provider: object = None
    xi_mode: str = D_ZERO
    d: float = 0.0
    c: float = 0.0
    d1: float = 0.0
    p: float = 0.0
    raw: object = None
    perturb: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.raw is not None:
            return
        if self.xi_mode == D_ZERO and self.d != 0.0:
            raise BadParams("xi_mode d_zero requires d = 0")
        if self.xi_mode == D_NONZERO and self.d == 0.0:
            raise BadParams("xi_mode d_nonzero requires d != 0")
        if self.xi_mode not in (D_ZERO, D_NONZERO):
            raise BadParams(f"unknown xi_mode {self.xi_mode!r}")

    def perturbed(self, **kw):
        return replace(self, perturb={**self.perturb, **kw})

    def xi_coefficients(self):
        """``(alpha, beta, gamma, delta)`` with ``xi'' = alpha + (beta u^2 + gamma u + delta)/u'^2``."""
        k = self.perturb.get("xi_scale", 1.0)
        if self.xi_mode == D_ZERO:
            return 0.0, 0.0, self.d1, self.c
        dd = self.d * k
        return 2.0 * dd, -2.0 * dd, self.d1, 2.0 * dd * self.p


@dataclass(frozen=True)
class WirtingerJet:
    f_zz: complex
    f_zzbar: complex
    f_zzz: complex
    f_zzzbar: complex
    f_zzzz: complex
    f_zzzzbar: complex


def _u_jet(ansatz: FAnsatz, y):
    jet = ansatz.u_provider(y)
    scale = ansatz.perturb.get("a_scale", 1.0)
    if scale == 1.0:
        return jet
    # rebuild the higher derivatives with a perturbed a
    params = ansatz.u_provider.params
    bad = FamilyParams(params.a * scale, params.b, params.b1, params.branch)
    u, u1 = jet.u, jet.u1
    u2 = bad.dA(u) / (4.0 * u1**2)
    u3 = (0.5 * bad.a + 3.0 * u**2 - 2.0 * u2**2) / u1
    u4 = (6.0 * u * u1 - 5.0 * u2 * u3) / u1
    return type(jet)(u, u1, u2, u3, u4)


def xi_derivatives(ansatz: FAnsatz, jet):
    """``(xi'', xi''', xi'''')`` along the ODE jet."""
    alpha, beta, gamma, delta = ansatz.xi_coefficients()
    u, u1, u2, u3 = jet.u, jet.u1, jet.u2, jet.u3
    P = beta * u * u + gamma * u + delta
    P1 = (2.0 * beta * u + gamma) * u1
    P2 = 2.0 * beta * u1 * u1 + (2.0 * beta * u + gamma) * u2
    Q = 1.0 / (u1 * u1)
    Q1 = -2.0 * u2 / u1**3
    Q2 = -2.0 * u3 / u1**3 + 6.0 * u2 * u2 / u1**4
    off = ansatz.perturb.get("xi_offset", 0.0)
    return alpha + P * Q + off, P1 * Q + P * Q1, P2 * Q + 2.0 * P1 * Q1 + P * Q2


def real_partials(ansatz: FAnsatz, phi, y):
    """Partials ``{(i, j): d^{i+j} f / dphi^i dy^j}`` for ``2 <= i + j <= 4``."""
    if ansatz.raw is not None:
        return ansatz.raw(phi, y)
    jet = _u_jet(ansatz, y)
    us = (jet.u, jet.u1, jet.u2, jet.u3, jet.u4)
    x2, x3, x4 = xi_derivatives(ansatz, jet)
    xis = {2: x2, 3: x3, 4: x4}
    trig = (np.cos(phi), -np.sin(phi), -np.cos(phi), np.sin(phi), np.cos(phi))
    d = ansatz.d
    out = {}
    for n in range(2, 5):
        for i in range(n + 1):
            j = n - i
            val = us[j] * trig[i]
            if i == 0:
                val = val + xis[j]
            if n == 2 and i == 2:
                val = val + 2.0 * d
            if n == 2 and j == 2:
                val = val - 2.0 * d
            out[(i, j)] = val
    return out


def _operator(n_z, n_zbar):
    """Coefficients of ``d_z^{n_z} d_zbar^{n_zbar}`` in ``d_phi^i d_y^j``, keyed by ``(i, j)``."""
    poly = np.array([1.0 + 0j])
    for factor in [np.array([1.0, -1j]) / 2] * n_z + [np.array([1.0, 1j]) / 2] * n_zbar:
        poly = np.convolve(poly, factor)
    n = n_z + n_zbar
    return {(n - k, k): poly[k] for k in range(n + 1)}


_OPS = {name: _operator(*nn) for name, nn in {
    "f_zz": (2, 0), "f_zzbar": (1, 1), "f_zzz": (3, 0),
    "f_zzzbar": (2, 1), "f_zzzz": (4, 0), "f_zzzzbar": (3, 1)}.items()}


def wirtinger_from_partials(parts) -> WirtingerJet:
    vals = {}
    for name, op in _OPS.items():
        vals[name] = sum(coef * parts[key] for key, coef in op.items())
    return WirtingerJet(**vals)


def f_jet(ansatz: FAnsatz, phi, y) -> WirtingerJet:
    """Wirtinger derivatives of ``f`` at ``(phi, y)``; arrays broadcast."""
    return wirtinger_from_partials(real_partials(ansatz, phi, y))


def _terms(jet: WirtingerJet):
    return (jet.f_zzzz * jet.f_zzbar, 3.0 * jet.f_zzz * jet.f_zzzbar, 2.0 * jet.f_zz * jet.f_zzzzbar)


def criterion_residual(jet: WirtingerJet):
    """``Im(f_zzzz f_zzbar + 3 f_zzz f_zzzbar + 2 f_zz f_zzzzbar)``."""
    return np.imag(sum(_terms(jet)))


def relative_residual(jet: WirtingerJet):
    """Residual divided by the largest of the three products at the same point."""
    terms = _terms(jet)
    scale = np.maximum.reduce([np.abs(t) for t in terms])
    return np.abs(np.imag(sum(terms))) / np.where(scale > 0.0, scale, 1.0)


@dataclass(frozen=True)
class GridReport:
    max_relative: float
    mean_relative: float
    max_absolute: float
    skipped: int
    points: int

    def as_dict(self):
        return {"max_relative": self.max_relative, "mean_relative": self.mean_relative,
                "max_absolute": self.max_absolute, "skipped": self.skipped, "points": self.points}


def check_grid(ansatz: FAnsatz, phi_range=(0.0, 2 * np.pi), y_range=(-2.0, 2.0), shape=(30, 30),
               min_du=1e-6, rng=None) -> GridReport:
    """Evaluate the criterion on a tensor grid; points with ``|u'| < min_du`` are skipped.

    With a ``numpy.random.Generator`` as ``rng`` the same number of points
    is drawn uniformly from the box instead.
    """
    if rng is None:
        P, Y = np.meshgrid(np.linspace(*phi_range, shape[0]), np.linspace(*y_range, shape[1]), indexing="ij")
    else:
        n = shape[0] * shape[1]
        P, Y = rng.uniform(*phi_range, n), rng.uniform(*y_range, n)
    keep = np.ones(P.shape, dtype=bool)
    if ansatz.raw is None:
        u1 = ansatz.u_provider(Y).u1
        keep = np.abs(u1) >= min_du
    jet = f_jet(ansatz, P[keep], Y[keep])
    rel = relative_residual(jet)
    return GridReport(float(rel.max()), float(rel.mean()), float(np.abs(criterion_residual(jet)).max()),
                      int((~keep).sum()), int(keep.sum()))


# ---------------------------------------------------------------------------
# finite-difference oracle


def central_weights(order, half_width):
    """Centered finite-difference weights on ``-m..m`` for the given derivative order."""
    x = np.arange(-half_width, half_width + 1, dtype=float)
    V = np.vander(x, increasing=True).T
    rhs = np.zeros(len(x))
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(V, rhs)


def _stencil_partials(f, phi, y, h):
    out = {}
    for n in range(2, 5):
        for i in range(n + 1):
            j = n - i
            # fourth-order accurate centred stencils
            wi = central_weights(i, (i + 1) // 2 + 1 if i else 0)
            wj = central_weights(j, (j + 1) // 2 + 1 if j else 0)
            mi, mj = (len(wi) - 1) // 2, (len(wj) - 1) // 2
            acc = 0.0
            for a, ca in zip(range(-mi, mi + 1), wi):
                if ca == 0.0:
                    continue
                for b, cb in zip(range(-mj, mj + 1), wj):
                    if cb == 0.0:
                        continue
                    acc = acc + ca * cb * f(phi + a * h, y + b * h)
            out[(i, j)] = acc / h ** (i + j)
    return out


def fd_oracle(f, phi, y, h=1e-2, richardson=True) -> WirtingerJet:
    """Wirtinger jet of ``f`` from centred finite differences.

    Each partial uses fourth-order accurate stencils with step ``h``; with
    ``richardson`` the results at ``2h`` and ``h`` are combined to cancel the
    leading error term.  Pairing with ``2h`` rather than ``h/2`` keeps the
    roundoff of the fourth derivatives near ``eps |f| / h^4``.
    """
    fine = _stencil_partials(f, phi, y, h)
    if not richardson:
        return wirtinger_from_partials(fine)
    coarse = _stencil_partials(f, phi, y, 2.0 * h)
    parts = {k: (16.0 * fine[k] - coarse[k]) / 15.0 for k in fine}
    return wirtinger_from_partials(parts)


class AnsatzEvaluator:
    """Pointwise values of the ansatz ``f`` by integrating ``u`` and ``xi`` from ``y = 0``.

    ``xi(0) = xi'(0) = 0``; affine parts of ``xi`` do not affect the
    criterion.  This route does not use the jet closure, which makes it an
    independent check of :func:`f_jet`.
    """

    def __init__(self, ansatz: FAnsatz, y_range=(-2.5, 2.5), tol=1e-13, max_step=1e-2):
        usol = ansatz.u_provider
        params = usol.params
        alpha, beta, gamma, delta = ansatz.xi_coefficients()
        off = ansatz.perturb.get("xi_offset", 0.0)
        u0 = float(usol.u(0.0))

        def rhs(_, z):
            u, xi, dxi = z
            u1 = params.branch * quartic_rhs(u, params) ** 0.25
            return [u1, dxi, alpha + (beta * u * u + gamma * u + delta) / (u1 * u1) + off]

        # short steps keep the dense output smooth at roundoff level, which
        # finite differences of order four need
        self._sols = [solve_ivp(rhs, (0.0, end), [u0, 0.0, 0.0], method="DOP853", rtol=tol, atol=tol,
                                max_step=max_step, dense_output=True).sol for end in y_range]
        self.d = ansatz.d

    def __call__(self, phi, y):
        y = np.asarray(y, dtype=float)
        pos = self._sols[1](np.maximum(y, 0.0))
        neg = self._sols[0](np.minimum(y, 0.0))
        z = np.where(y >= 0.0, pos, neg)
        u, xi = z[0], z[1]
        return u * np.cos(phi) + xi + self.d * (phi * phi - y * y)


def polynomial_partials(coeffs):
    """Raw partials for a polynomial ``sum c[i, j] phi^i y^j`` (testing helper)."""
    coeffs = np.asarray(coeffs, dtype=float)

    def partials(phi, y):
        out = {}
        for n in range(2, 5):
            for i in range(n + 1):
                j = n - i
                acc = 0.0
                for (a, b), cval in np.ndenumerate(coeffs):
                    if cval == 0.0 or a < i or b < j:
                        continue
                    fa = comb(a, i) * np.prod(np.arange(1, i + 1))
                    fb = comb(b, j) * np.prod(np.arange(1, j + 1))
                    acc = acc + cval * fa * fb * phi ** (a - i) * y ** (b - j)
                out[(i, j)] = acc
        return out

    return partials

