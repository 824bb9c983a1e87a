"""The Kovalevskaya case as a member of the shifted family.

At ``b = 0``, ``a = 1``, ``p = 0`` the shifted Hamiltonian in ``(phi, u)``,
``u > 0``, has metric ``Psi/sqrt(1+u^2) (dphi^2 + du^2/(u sqrt(1+u^2)))``
with ``Psi(u) = sqrt(1+u^2) - u``.  The map

    x = Psi cos(phi),  y = Psi sin(phi),  z = +-sqrt(1 - Psi^2)

carries it to twice the Kovalevskaya metric
``(dx^2 + dy^2 + 2 dz^2) / (2x^2 + 2y^2 + z^2)`` on the unit sphere, with
potential ``x/2``.

For dynamics and integral reconstruction the same system is written in
stereographic coordinates ``(X, Y)`` from the opposite pole, with
``x = 2X/(1+|q|^2)``, ``z = (1-|q|^2)/(1+|q|^2)``; there the inverse metric
is ``(1+6s+s^2)/8 I - q q^T / 2`` and the potential ``X/(1+s)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import BandChart, ChartedSystem, PoleLink, RadialChart, SystemParams, monotone_inverse
from .errors import DegenerateCoordinate
from .family import S_MAX, build_shifted
from .jets import Jet

KAPPA = 2.0
KAPPA_POTENTIAL = -0.5
FINDER_WINDOW = (0.4, 2.5)


@dataclass(frozen=True)
class EmbeddedSystem:
    """Conservative system on the unit sphere in ``R^3``.

    Kinetic form ``(w . v^2) / (den . x^2)`` for a tangent vector ``v`` at
    ``x``, and a potential function of ``(x, y, z)``.
    """

    weights: tuple
    denominators: tuple
    potential_fn: object
    name: str = ""

    def metric_factor(self, x, y, z):
        d1, d2, d3 = self.denominators
        return 1.0 / (d1 * x * x + d2 * y * y + d3 * z * z)

    def kinetic(self, point, v):
        x, y, z = point
        w1, w2, w3 = self.weights
        return (w1 * v[0] ** 2 + w2 * v[1] ** 2 + w3 * v[2] ** 2) * self.metric_factor(x, y, z)

    def potential(self, x, y, z):
        return self.potential_fn(x, y, z)

    def pullback_metric(self, J, point):
        """Quadratic form ``J^T diag(w) J`` times the metric factor; ``J`` has shape ``(..., 3, 2)``."""
        D = np.asarray(self.weights, dtype=float)
        G = np.einsum("...ia,i,...ib->...ab", J, D, J)
        return G * self.metric_factor(*point)[..., None, None]


def _kov_potential(x, y, z):
    return -x


def kovalevskaya_reference() -> EmbeddedSystem:
    """Kinetic weights ``(1, 1, 2)`` over ``(2, 2, 1)`` and potential ``-x``."""
    return EmbeddedSystem((1.0, 1.0, 2.0), (2.0, 2.0, 1.0), _kov_potential, "kovalevskaya")


def goryachev_reference(B1: float, B2: float) -> EmbeddedSystem:
    """Kovalevskaya kinetic form with potential ``-2 B1 x y - B2 (x^2 - y^2) - x``."""

    def potential(x, y, z):
        v = _kov_potential(x, y, z)
        # skip vanishing terms so that B1 = B2 = 0 is the reference bit for bit
        if B1 != 0.0:
            v = v - 2.0 * B1 * x * y
        if B2 != 0.0:
            v = v - B2 * (x * x - y * y)
        return v

    return EmbeddedSystem((1.0, 1.0, 2.0), (2.0, 2.0, 1.0), potential, f"goryachev({B1},{B2})")


def psi(u):
    """``Psi(u) = sqrt(1+u^2) - u``, evaluated without cancellation."""
    u = np.asarray(u, dtype=float)
    return 1.0 / (np.sqrt(1.0 + u * u) + u)


def chart_to_sphere(u, phi, hemisphere: int = 1):
    """Point ``(x, y, z)`` on the unit sphere for chart coordinates ``(u, phi)``."""
    P = psi(u)
    # 1 - Psi^2 = 2 u Psi
    z = hemisphere * np.sqrt(2.0 * np.asarray(u, dtype=float) * P)
    return P * np.cos(phi), P * np.sin(phi), z


def sphere_to_chart(x, y, z):
    """Inverse of :func:`chart_to_sphere`: ``(u, phi, hemisphere)``."""
    P = np.hypot(x, y)
    return 0.5 * (1.0 / P - P), np.arctan2(y, x), np.where(np.asarray(z) >= 0.0, 1, -1)


def _sphere_jacobian(u, phi, hemisphere=1):
    """``d(x, y, z)/d(u, phi)`` with shape ``(..., 3, 2)``."""
    u = np.asarray(u, dtype=float)
    phi = np.asarray(phi, dtype=float)
    P = psi(u)
    r = np.sqrt(1.0 + u * u)
    dP = -P / r
    z = np.sqrt(2.0 * u * P)
    dz = hemisphere * (P + u * dP) / z
    c, s = np.cos(phi), np.sin(phi)
    J = np.empty(np.broadcast(u, phi).shape + (3, 2))
    J[..., 0, 0] = dP * c
    J[..., 0, 1] = -P * s
    J[..., 1, 0] = dP * s
    J[..., 1, 1] = P * c
    J[..., 2, 0] = dz
    J[..., 2, 1] = 0.0
    return J


def verify_metric_identity(u, phi, hemisphere: int = 1):
    """Max entry difference between the pullback of ``dx^2 + dy^2 + 2dz^2`` and
    ``Psi^2 (dphi^2 + du^2/(u sqrt(1+u^2)))``, both in the basis ``(du, dphi)``.

    Raises
    ------
    DegenerateCoordinate
        For ``u <= 0``.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise DegenerateCoordinate("the chart degenerates at u <= 0")
    J = _sphere_jacobian(u, phi, hemisphere)
    G = np.einsum("...ia,i,...ib->...ab", J, np.array([1.0, 1.0, 2.0]), J)
    P2 = psi(u) ** 2
    target = np.zeros_like(G)
    target[..., 0, 0] = P2 / (u * np.sqrt(1.0 + u * u))
    target[..., 1, 1] = P2
    return float(np.max(np.abs(G - target)))


def _kov2_profiles(u):
    r = (1.0 + u * u).sqrt()
    E1 = 1.0 / (r * (r + u))
    h1 = E1.reciprocal()
    h2 = h1 * u * r
    W = 0.5 / (r + u)
    return h1, h2, W


def _polar_profiles(rho):
    s = rho * rho
    c0 = (1.0 + 6.0 * s + s * s) / 8.0
    return c0 / s, (1.0 + s) * (1.0 + s) / 8.0, rho / (1.0 + s)


def _stereo_charts(s_max=S_MAX):
    def c0(s):
        return (1.0 + 6.0 * s + s * s) / 8.0

    def c1(s):
        return np.full_like(s, -0.5)

    def v(s):
        return 1.0 / (1.0 + s)

    return (RadialChart.from_functions("N", s_max, c0, c1, v),
            RadialChart.from_functions("S", s_max, c0, c1, v))


def _links(s_max=S_MAX):
    rmax = float(np.sqrt(s_max))

    def u_of_rho(rho):
        # upper hemisphere: rho < 1, Psi = 2 rho / (1 + rho^2)
        P = 2.0 * rho / (1.0 + rho * rho)
        dP = 2.0 * (1.0 - rho * rho) / (1.0 + rho * rho) ** 2
        return 0.5 * (1.0 / P - P), -0.5 * (1.0 / P**2 + 1.0) * dP

    def rho_of_u(u):
        if u <= 0.0:
            raise DegenerateCoordinate("u <= 0 is the equator of the chart")
        P = float(psi(u))
        return P / (1.0 + np.sqrt(2.0 * u * P))

    def rho_id(rho):
        return rho, 1.0

    def rho_inv(rho):
        return 1.0 / rho, -1.0 / (rho * rho)

    def inv_rho(w):
        return monotone_inverse(rho_inv, 1.0 / rmax, 1e12, w)

    return (
        PoleLink("kov2", "N", u_of_rho, rho_of_u, 1),
        PoleLink("polar", "N", rho_id, lambda w: float(w) if w < rmax else 0.0, 1),
        PoleLink("polar", "S", rho_inv, inv_rho, -1),
    )


def kov_chart_system() -> ChartedSystem:
    """The Kovalevskaya system with charts ``kov2`` ``(phi, u)``, ``polar``
    ``(phi, rho)``, and the stereographic pole charts ``N`` and ``S``.

    ``kov2`` covers the upper hemisphere only and degenerates at ``u = 0``;
    it is evaluated, never integrated in.
    """
    kov2 = BandChart("kov2", _kov2_profiles, (0.0, np.inf))
    polar = BandChart("polar", _polar_profiles, (0.0, np.inf), coords=("phi", "rho"))
    north, south = _stereo_charts()
    return ChartedSystem(
        SystemParams("kovalevskaya", 1.0, 0.0, 0.0, 1),
        {"kov2": kov2, "polar": polar, "N": north, "S": south},
        links=_links(),
        poles=("N", "S"),
        finder_chart="polar",
        finder_window=FINDER_WINDOW,
    )


def compare_with_shifted(u, phi):
    """Compare the ``kov2`` chart with the shifted family at ``b=0, a=1, p=0``.

    Returns
    -------
    dict
        ``metric``: max relative difference of ``(h1, h2)``;
        ``potential``: max absolute difference of the potentials at equal
        ``phi``; ``potential_rotated``: the same after ``phi -> phi + pi``.
    """
    u = np.asarray(u, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(u <= 0.0):
        raise DegenerateCoordinate("the chart degenerates at u <= 0")
    shifted = build_shifted(1.0, 0.0, 0.0, global_=False).chart("band")
    kov2 = kov_chart_system().chart("kov2")
    a1, a2, aW = shifted.jets(u)
    b1, b2, bW = kov2.jets(u)
    metric = max(np.max(np.abs(a1.v - b1.v) / np.abs(b1.v)), np.max(np.abs(a2.v - b2.v) / np.abs(b2.v)))
    pot = np.max(np.abs(aW.v * np.cos(phi) - bW.v * np.cos(phi)))
    rot = np.max(np.abs(aW.v * np.cos(phi + np.pi) - bW.v * np.cos(phi)))
    return {"metric": float(metric), "potential": float(pot), "potential_rotated": float(rot)}


def match_kovalevskaya(u, phi):
    """Pull the ``kov2`` system back to the sphere and compare with the reference.

    The scale constants are fitted by least squares; the mismatches are
    taken with the analytic values ``KAPPA = 2`` and ``KAPPA_POTENTIAL = -1/2``.

    Returns
    -------
    dict
        ``metric_mismatch`` (max relative entry difference of
        ``G_kov2 - KAPPA * G_ref``), ``potential_mismatch`` (max
        ``|V_kov2 - KAPPA_POTENTIAL * V_ref|`` over ``max |V_kov2|``), and the
        fitted ``kappa`` and ``kappa_potential``; both hemispheres are used.
    """
    u = np.asarray(u, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(u <= 0.0):
        raise DegenerateCoordinate("the chart degenerates at u <= 0")
    ref = kovalevskaya_reference()
    kov2 = kov_chart_system().chart("kov2")
    h1, h2, W = kov2.jets(u)
    G2 = np.zeros(np.broadcast(u, phi).shape + (2, 2))
    # basis (du, dphi)
    G2[..., 0, 0] = 1.0 / h2.v
    G2[..., 1, 1] = 1.0 / h1.v
    V2 = W.v * np.cos(phi)
    Gs, Vs = [], []
    for hemi in (1, -1):
        point = chart_to_sphere(u, phi, hemi)
        Gs.append(ref.pullback_metric(_sphere_jacobian(u, phi, hemi), point))
        Vs.append(ref.potential(*point))
    GK = np.stack(Gs)
    VK = np.stack(Vs)
    G2s = np.broadcast_to(G2, GK.shape)
    V2s = np.broadcast_to(V2, VK.shape)
    kappa = float(np.sum(G2s * GK) / np.sum(GK * GK))
    kappa_t = float(np.sum(V2s * VK) / np.sum(VK * VK))
    scale = np.maximum(np.abs(G2s[..., 0, 0]), np.abs(G2s[..., 1, 1]))[..., None, None]
    metric_mm = float(np.max(np.abs(G2s - KAPPA * GK) / scale))
    pot_mm = float(np.max(np.abs(V2s - KAPPA_POTENTIAL * VK)) / np.max(np.abs(V2s)))
    return {"metric_mismatch": metric_mm, "potential_mismatch": pot_mm,
            "kappa": kappa, "kappa_potential": kappa_t}


def embedded_hamiltonian(point, v, system: EmbeddedSystem, kappa=KAPPA, kappa_t=KAPPA_POTENTIAL):
    """``kappa * (kinetic form) + kappa_t * potential`` on the sphere."""
    return kappa * system.kinetic(point, v) + kappa_t * system.potential(*point)


def stereo_to_sphere(X, Y):
    s = X * X + Y * Y
    return 2.0 * X / (1.0 + s), 2.0 * Y / (1.0 + s), (1.0 - s) / (1.0 + s)


def kov_radial_jet(rho):
    """Profiles of the ``polar`` chart as jets; used in tests."""
    return _polar_profiles(Jet.variable(rho))
