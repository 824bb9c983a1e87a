import json

import numpy as np
import pytest
from scipy.linalg import svdvals

from conftest import FAMILY_IC
from quarticflow import IntegratorConfig, PhaseState, build_base, integrate
from quarticflow.dynamics import in_chart
from quarticflow.errors import WindowExit, WindowOutsideChart
from quarticflow.integral_finder import (
    QuarticAnsatz,
    banded_factor,
    bracket_operator,
    certify,
    find_integrals,
    hamiltonian_terms,
    project,
    reconstruct,
    smallest_singular,
    trivial_integrals,
)

SMALL = QuarticAnsatz(degree=2, fourier=3, radial=12)


def _resum_rows(ansatz, op, out, phi, n, pphi, pw):
    """Value of the bracket encoded in ``out`` at node ``n``."""
    total, offset = 0.0, 0
    for sop in op.sectors:
        sec = sop.sector
        rows = out[offset: offset + sum(sec.row_sizes)]
        offset += sum(sec.row_sizes)
        starts = np.concatenate([[0], np.cumsum(sec.row_sizes)])
        for l in range(sec.M + 2):
            for o, (j, k) in enumerate(sec.outs):
                rs = sec.row_slice(l, o)
                if rs is None:
                    continue
                c = rows[starts[l]: starts[l + 1]][rs][n]
                trig = np.cos(l * phi) if sec.out_cos[o] else np.sin(l * phi)
                total += c * trig * pphi**j * pw**k
    return total


def test_operator_matches_finite_difference_bracket(base1, rng):
    ans = SMALL
    op = bracket_operator(base1, ans)
    coef = rng.normal(size=ans.size)
    out = op.matvec(coef)
    band = base1.chart("band")
    _, w = ans.nodes()

    def F(z):
        return ans.evaluate(*z, coefficients=coef)[0]

    def H(z):
        return band.hamiltonian(z[:2], z[2:])

    def grad(f, z, h=1e-6):
        g = np.empty(4)
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            g[k] = (f(z + e) - f(z - e)) / (2 * h)
        return g

    for n in (1, 4, 9):
        z = np.array([rng.uniform(-np.pi, np.pi), w[n], rng.normal(), rng.normal()])
        gF, gH = grad(F, z), grad(H, z)
        ref = gF[0] * gH[2] + gF[1] * gH[3] - gF[2] * gH[0] - gF[3] * gH[1]
        got = _resum_rows(ans, op, out, z[0], n, z[2], z[3])
        assert abs(got - ref) < 1e-6 * max(1.0, np.abs(coef).max())


def test_banded_factor_preserves_norms(base1, rng):
    op = bracket_operator(base1, SMALL)
    for sop in op.sectors:
        R = banded_factor(sop)
        A = sop.dense()
        x = rng.normal(size=(A.shape[1], 3))
        assert np.allclose(np.linalg.norm(R.matvec(x), axis=0), np.linalg.norm(A @ x, axis=0), rtol=1e-12)


def test_smallest_singular_against_dense_svd(base1):
    op = bracket_operator(base1, SMALL)
    for sop in op.sectors:
        ref = np.sort(svdvals(sop.dense()))
        s, V = smallest_singular(banded_factor(sop), k=8)
        top = ref[-1]
        assert np.allclose(s[:4] / top, ref[:4] / top, rtol=1e-3, atol=1e-13)
        assert np.allclose(np.linalg.norm(sop.dense() @ V[:, :4], axis=0), s[:4], rtol=1e-3, atol=1e-12 * top)


def test_projection_is_exact_for_band_limited_functions(rng):
    ans = QuarticAnsatz(degree=2, fourier=3, radial=16)
    terms = {(2, 0): lambda P, W: np.cos(2 * P) * W**3, (1, 1): lambda P, W: np.sin(P) * np.exp(W)}
    coef = project(ans, terms)
    phi, w, p1, p2 = rng.uniform(-np.pi, np.pi, 50), rng.uniform(-2, 2, 50), rng.normal(size=50), rng.normal(size=50)
    ref = np.cos(2 * phi) * w**3 * p1**2 + np.sin(phi) * np.exp(w) * p1 * p2
    assert np.max(np.abs(ans.evaluate(phi, w, p1, p2, coef) - ref)) < 1e-9


def test_hamiltonian_is_in_the_kernel(shifted1):
    ans = QuarticAnsatz(degree=2)
    op = bracket_operator(shifted1, ans)
    h = project(ans, hamiltonian_terms(shifted1, "band"))
    assert np.linalg.norm(op.matvec(h)) < 1e-8 * np.linalg.norm(h)


def test_angular_momentum_on_round_sphere(base2):
    ans = QuarticAnsatz(degree=1, fourier=3, radial=32)
    op = bracket_operator(base2, ans)
    p_phi = project(ans, {(1, 0): lambda P, W: np.ones_like(P)})
    assert np.linalg.norm(op.matvec(p_phi)) < 1e-10
    rep = find_integrals(op, trivial_integrals(base2, ans))
    assert rep.deflated_dimension >= 1


def test_no_quadratic_integral_for_base(base1):
    _, rep = reconstruct(base1, QuarticAnsatz(degree=2))
    assert rep.dimension == rep.trivial_rank == 2
    assert rep.deflated_dimension == 0
    assert rep.gap_ratio > 1e3


@pytest.fixture(scope="module")
def quartic_base0(base0):
    ans, rep = reconstruct(base0)
    traj = integrate(base0, FAMILY_IC, 100.0, IntegratorConfig(scheme="midpoint4"))
    return ans, rep, traj


def test_quartic_integral_found_and_certified(base0, quartic_base0):
    ans, rep, traj = quartic_base0
    assert rep.dimension == 4 and rep.trivial_rank == 3 and rep.deflated_dimension == 1
    assert rep.gap_ratio > 1e3
    F = ans.with_coefficients(rep.nontrivial[:, 0])
    assert certify(base0, F, traj) < 1e-6


def test_random_coefficients_are_not_conserved(base0, quartic_base0, rng):
    ans, _, traj = quartic_base0
    assert certify(base0, ans.with_coefficients(rng.normal(size=ans.size)), traj) > 1e-2


def test_hamiltonian_certifies_like_energy(base0, quartic_base0):
    ans, _, traj = quartic_base0
    H = ans.with_coefficients(project(ans, hamiltonian_terms(base0, "band")))
    d = certify(base0, H, traj)
    assert d < 1e-8
    # beyond the integrator drift, only the interpolation error of H enters
    zb = in_chart(base0, traj, "band")
    proj_err = np.max(np.abs(H.evaluate(*zb.T) - base0.chart("band").hamiltonian(zb[:, :2].T, zb[:, 2:].T)))
    assert d <= 10 * traj.energy_error() + 2 * proj_err / abs(traj.H[0])


def test_window_exit_reports_time(base0):
    traj = integrate(base0, FAMILY_IC, 10.0)
    ans = QuarticAnsatz(degree=2, fourier=2, radial=8, window=(-0.3, 0.3)).with_coefficients(np.zeros(1))
    with pytest.raises(WindowExit) as exc:
        certify(base0, ans, traj)
    assert exc.value.time is not None and 0.0 < exc.value.time < 10.0


def test_window_must_lie_in_chart(base0):
    local = build_base(1.0, b=0.0, global_=False)
    with pytest.raises(WindowOutsideChart):
        bracket_operator(local, QuarticAnsatz(window=(-1.0, 1.0)))
    with pytest.raises(WindowOutsideChart):
        bracket_operator(base0, QuarticAnsatz(chart="N"))


def test_ansatz_round_trip(rng):
    ans = QuarticAnsatz(degree=2, fourier=2, radial=6)
    ans = ans.with_coefficients(rng.normal(size=ans.size))
    back = QuarticAnsatz.from_dict(json.loads(json.dumps(ans.to_dict())))
    assert back == ans and np.array_equal(back.coefficients, ans.coefficients)
    s = PhaseState("band", np.array([0.3, 0.2]), np.array([1.0, -1.0]))
    assert back.evaluate(*s.q, *s.p) == ans.evaluate(*s.q, *s.p)
