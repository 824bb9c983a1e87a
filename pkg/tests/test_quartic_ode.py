import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from quarticflow.errors import BadParams, NonPositiveA, SingularA
from quarticflow.quartic_ode import (
    FamilyParams,
    PoleFunctions,
    USolution,
    compute_pole_functions,
    jet_from_u,
    residual_eq4,
    solve_u,
    xi_closed_form,
)


@pytest.fixture(scope="module")
def poles():
    return {a: compute_pole_functions(a) for a in (-1.0, 0.0, 1.0, 3.0)}


@pytest.mark.parametrize("a", [-1.0, 0.0, 1.0, 3.0])
def test_eq4_residual_along_solution(a):
    sol = solve_u(FamilyParams(a), 0.0, (-5.0, 5.0))
    y = np.linspace(-5, 5, 2001)
    assert np.max(np.abs(residual_eq4(sol(y), a))) < 1e-8


@given(st.floats(-1.9, 10.0), st.floats(-3.0, 3.0))
def test_jet_closure_satisfies_eq4_identically(a, u):
    # the third-order equation is an algebraic consequence of the closure
    jet = jet_from_u(u, FamilyParams(a))
    scale = max(1.0, abs(jet.u1 * jet.u3), jet.u**2, jet.u2**2)
    assert abs(residual_eq4(jet, a)) < 1e-12 * scale


def test_jet_closure_against_finite_differences():
    sol = solve_u(FamilyParams(1.0), 0.0, (-3.0, 3.0), tol=1e-13)
    y, h = 0.37, 1e-3
    u = sol.u(np.array([y - 2 * h, y - h, y, y + h, y + 2 * h]))
    j = sol(y)
    assert np.isclose(j.u1, (u[3] - u[1]) / (2 * h), rtol=1e-6)
    assert np.isclose(j.u2, (u[3] - 2 * u[2] + u[1]) / h**2, rtol=1e-5)
    assert np.isclose(j.u3, (u[4] - 2 * u[3] + 2 * u[1] - u[0]) / (2 * h**3), rtol=1e-4)


def test_sinh_closed_form():
    sol = solve_u(FamilyParams(2.0), 0.0, (-5.0, 5.0))
    y = np.linspace(-5, 5, 1001)
    assert np.max(np.abs(sol.u(y) - np.sinh(y))) < 1e-8 * np.cosh(5.0)
    assert np.max(np.abs(sol.u(y) - np.sinh(y)) / np.cosh(y)) < 1e-8


@pytest.mark.parametrize("a", [0.0, 1.0, 3.0])
def test_odd_parity(a):
    sol = solve_u(FamilyParams(a), 0.0, (-4.0, 4.0))
    y = np.linspace(0, 4, 401)
    assert np.max(np.abs(sol.u(y) + sol.u(-y))) < 1e-9


def test_solver_refuses_nonpositive_A():
    with pytest.raises(SingularA):
        solve_u(FamilyParams(-3.0, 1.0), 1.0)
    with pytest.raises(NonPositiveA):
        jet_from_u(1.0, FamilyParams(-3.0, 1.0))


def test_solver_stops_at_zero_of_A():
    # b = 0, a = 1: A = u^2 (1 + u^2) vanishes at u = 0, reached as y -> -inf only;
    # b = -1 has a simple root at u ~ 0.786 which is hit in finite y
    with pytest.raises(SingularA):
        solve_u(FamilyParams(1.0, -1.0), 2.0, (-10.0, 1.0))


def test_branch_validation():
    with pytest.raises(BadParams):
        FamilyParams(1.0, branch=0)


def test_usolution_round_trip():
    sol = solve_u(FamilyParams(1.0), 0.2, (-2.0, 2.0))
    data = json.loads(json.dumps(sol.to_dict()))
    back = USolution.from_dict(data)
    y = np.linspace(-2, 2, 11)
    assert np.array_equal(back.u(y), sol.u(y))


# -- pole functions --------------------------------------------------------


def test_g_vanishes_at_one(poles):
    for pf in poles.values():
        assert pf.g(1.0) == 0.0


def test_nu_positive(poles):
    s = np.linspace(0, 1, 1001)
    for pf in poles.values():
        assert np.all(pf.nu(s) > 0.0)


def test_g_monotone_for_nonnegative_a(poles):
    s = np.linspace(0, 4.4, 500)
    for a, pf in poles.items():
        if a >= 0:
            assert np.all(np.diff(pf.g(s)) < 0.0), a


@pytest.mark.parametrize("a", [-1.0, 0.0, 1.0, 3.0])
def test_exponential_representations(poles, a):
    pf = poles[a]
    sol = solve_u(FamilyParams(a), 0.0, (-0.5, 3.5))
    y = np.linspace(0.1, 3.0, 300)
    j = sol(y)
    s = np.exp(-2 * y)
    assert np.max(np.abs(np.exp(y) * pf.g(s) - j.u) / np.abs(j.u)) < 1e-7
    assert np.max(np.abs(np.exp(y) * pf.nu(s) - j.u1) / np.abs(j.u1)) < 1e-7
    assert np.max(np.abs(np.exp(-y) * pf.mu(s) - j.u1**2 * (j.u2 - j.u))) < 1e-7
    # forms at the other pole, where e^{2y} <= s_max
    yy = y[y < 0.7]
    jj = sol(yy)
    assert np.max(np.abs(np.exp(-yy) * pf.nu(np.exp(2 * yy)) - jj.u1) / jj.u1) < 1e-7
    assert np.max(np.abs(-np.exp(yy) * pf.mu(np.exp(2 * yy)) - jj.u1**2 * (jj.u2 - jj.u))) < 1e-7


@pytest.mark.parametrize("a", [0.0, 1.0, 3.0])
def test_xi_against_quadrature_and_closed_form(poles, a):
    pf = poles[a]
    for t in (0.0, 0.2, 0.7, 2.0):
        ref = quad(lambda s: pf.mu(s) / pf.nu(s), t, 1.0, epsabs=1e-14, epsrel=1e-13)[0]
        assert abs(pf.xi(t) - ref) < 1e-10
        assert abs(pf.xi(t) - xi_closed_form(t, pf.g(t), a)) < 1e-9


def test_mu_at_the_pole(poles):
    for a, pf in poles.items():
        assert np.isclose(pf.mu(0.0), -(4 - a * a) / (8 * pf.g(0.0)), rtol=1e-9)


def test_pole_functions_round_trip(poles):
    pf = poles[1.0]
    back = PoleFunctions.from_dict(json.loads(json.dumps(pf.to_dict())))
    s = np.linspace(0, 4, 9)
    for name in ("g", "nu", "mu", "xi"):
        assert np.array_equal(getattr(back, name)(s), getattr(pf, name)(s))


def test_pole_functions_reject_a_below_minus_two():
    with pytest.raises(BadParams):
        compute_pole_functions(-2.0)
