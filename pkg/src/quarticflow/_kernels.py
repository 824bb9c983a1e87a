"""Compiled inner loops for the pole charts.

A pole chart is described by six Chebyshev series in ``s = |q|^2`` packed
row-wise into one array ``P``: ``c0, c0', c1, c1', v, v'`` (derivatives with
respect to ``s``).  The Hamiltonian is

    H = 1/2 (c0 |p|^2 + c1 (q.p)^2) + v q_1
"""

import numba
import numpy as np

YOSHIDA_1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
YOSHIDA_0 = -(2.0 ** (1.0 / 3.0)) / (2.0 - 2.0 ** (1.0 / 3.0))

# stop flags for radial_run
RUN_DONE = 0
RUN_SWITCH = 1
RUN_DIVERGED = 2
RUN_OUTSIDE = 3


@numba.njit(cache=True)
def clenshaw(c, x):
    b1 = 0.0
    b2 = 0.0
    x2 = 2.0 * x
    for k in range(c.shape[0] - 1, 0, -1):
        b1, b2 = c[k] + x2 * b1 - b2, b1
    return c[0] + x * b1 - b2


@numba.njit(cache=True)
def _profiles(P, s, s_max):
    x = 2.0 * s / s_max - 1.0
    return (clenshaw(P[0], x), clenshaw(P[1], x), clenshaw(P[2], x),
            clenshaw(P[3], x), clenshaw(P[4], x), clenshaw(P[5], x))


@numba.njit(cache=True)
def radial_H(P, s_max, z):
    X, Y, pX, pY = z[0], z[1], z[2], z[3]
    s = X * X + Y * Y
    c0, _, c1, _, v, _ = _profiles(P, s, s_max)
    qp = X * pX + Y * pY
    return 0.5 * (c0 * (pX * pX + pY * pY) + c1 * qp * qp) + v * X


@numba.njit(cache=True)
def radial_rhs(P, s_max, z, out):
    X, Y, pX, pY = z[0], z[1], z[2], z[3]
    s = X * X + Y * Y
    c0, dc0, c1, dc1, v, dv = _profiles(P, s, s_max)
    qp = X * pX + Y * pY
    pp = pX * pX + pY * pY
    common = dc0 * pp + dc1 * qp * qp + 2.0 * dv * X
    out[0] = c0 * pX + c1 * qp * X
    out[1] = c0 * pY + c1 * qp * Y
    out[2] = -(X * common + c1 * qp * pX + v)
    out[3] = -(Y * common + c1 * qp * pY)


@numba.njit(cache=True)
def midpoint_step(P, s_max, z0, h, tol, max_iter, z1):
    """One implicit-midpoint step by fixed-point iteration; returns iterations used or -1."""
    f = np.empty(4)
    zm = np.empty(4)
    radial_rhs(P, s_max, z0, f)
    for i in range(4):
        z1[i] = z0[i] + h * f[i]
    scale = 1.0
    for i in range(4):
        scale = max(scale, abs(z0[i]))
    for it in range(1, max_iter + 1):
        for i in range(4):
            zm[i] = 0.5 * (z0[i] + z1[i])
        radial_rhs(P, s_max, zm, f)
        delta = 0.0
        for i in range(4):
            new = z0[i] + h * f[i]
            if not np.isfinite(new):
                return -1
            delta = max(delta, abs(new - z1[i]))
            z1[i] = new
        if delta <= tol * scale:
            return it
        if not np.isfinite(delta):
            return -1
    return -1


@numba.njit(cache=True)
def radial_run(P, s_max, z0, dt, n_steps, r_switch, tol, max_iter, order4):
    """Advance up to ``n_steps`` steps, stopping early when ``|q| > r_switch``.

    Returns ``(states, n_done, flag, worst_iterations)``; ``states[0] = z0``.
    """
    states = np.empty((n_steps + 1, 4))
    states[0] = z0
    z = z0.copy()
    z1 = np.empty(4)
    z2 = np.empty(4)
    worst = 0
    r2 = r_switch * r_switch
    for n in range(n_steps):
        if order4:
            it1 = midpoint_step(P, s_max, z, YOSHIDA_1 * dt, tol, max_iter, z1)
            it2 = midpoint_step(P, s_max, z1, YOSHIDA_0 * dt, tol, max_iter, z2)
            it3 = midpoint_step(P, s_max, z2, YOSHIDA_1 * dt, tol, max_iter, z1)
            if it1 < 0 or it2 < 0 or it3 < 0:
                return states, n, RUN_DIVERGED, worst
            worst = max(worst, it1, it2, it3)
        else:
            it = midpoint_step(P, s_max, z, dt, tol, max_iter, z1)
            if it < 0:
                return states, n, RUN_DIVERGED, worst
            worst = max(worst, it)
        for i in range(4):
            z[i] = z1[i]
        states[n + 1] = z
        s = z[0] * z[0] + z[1] * z[1]
        if s > s_max:
            return states, n + 1, RUN_OUTSIDE, worst
        if s > r2:
            return states, n + 1, RUN_SWITCH, worst
    return states, n_steps, RUN_DONE, worst
