import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quarticflow.criterion import (
    D_NONZERO,
    D_ZERO,
    AnsatzEvaluator,
    FAnsatz,
    check_grid,
    criterion_residual,
    f_jet,
    fd_oracle,
    polynomial_partials,
    relative_residual,
)
from quarticflow.errors import BadParams
from quarticflow.quartic_ode import FamilyParams, solve_u

CLOSURES = [
    dict(xi_mode=D_ZERO, c=1.0, d1=0.0),
    dict(xi_mode=D_ZERO, c=1.0, d1=2.0),
    dict(xi_mode=D_NONZERO, d=0.5, p=0.0),
    dict(xi_mode=D_NONZERO, d=0.5, p=1.0),
]


@pytest.fixture(scope="module")
def usols():
    return {a: solve_u(FamilyParams(a), 0.0, (-5.0, 5.0), tol=1e-13) for a in (0.0, 1.0, 3.0)}


def _jet_array(j):
    return np.array([j.f_zz, j.f_zzbar, j.f_zzz, j.f_zzzbar, j.f_zzzz, j.f_zzzzbar])


@pytest.mark.parametrize("a", [0.0, 1.0, 3.0])
@pytest.mark.parametrize("closure", CLOSURES, ids=["c1", "c1d2", "d0.5p0", "d0.5p1"])
def test_criterion_holds_on_family(usols, a, closure):
    rep = check_grid(FAnsatz(usols[a], **closure), (0, 2 * np.pi), (-2, 2), (30, 30))
    assert rep.max_relative < 1e-7
    assert rep.skipped == 0 and rep.points == 900


@pytest.mark.parametrize("a", [0.0, 1.0, 3.0])
@pytest.mark.parametrize("closure", CLOSURES, ids=["c1", "c1d2", "d0.5p0", "d0.5p1"])
def test_jets_match_finite_differences(usols, rng, a, closure):
    ans = FAnsatz(usols[a], **closure)
    f = AnsatzEvaluator(ans)
    for _ in range(12):
        phi, y = rng.uniform(0, 2 * np.pi), rng.uniform(-2, 2)
        exact = _jet_array(f_jet(ans, phi, y))
        approx = _jet_array(fd_oracle(f, phi, y))
        assert np.max(np.abs(exact - approx)) < 1e-5 * np.max(np.abs(exact))


@pytest.mark.parametrize("a", [0.0, 1.0, 3.0])
def test_sensitivity_to_closure_violation(usols, a):
    for closure in CLOSURES:
        ans = FAnsatz(usols[a], **closure)
        assert check_grid(ans.perturbed(xi_offset=0.1)).max_relative > 1e-3
    for closure in CLOSURES[2:]:
        ans = FAnsatz(usols[a], **closure)
        assert check_grid(ans.perturbed(xi_scale=1.01)).max_relative > 1e-4


def test_free_constants_do_not_break_criterion(usols):
    # c, d1, p are integration constants of the closure: any values work
    for c, d1 in [(0.3, -1.7), (-2.0, 5.0)]:
        assert check_grid(FAnsatz(usols[1.0], D_ZERO, c=c, d1=d1)).max_relative < 1e-7


def test_wirtinger_of_polynomial():
    # f = (phi^2 + y^2)^2 = z^2 zbar^2
    coeffs = np.zeros((5, 5))
    coeffs[4, 0] = coeffs[0, 4] = 1.0
    coeffs[2, 2] = 2.0
    ans = FAnsatz(raw=polynomial_partials(coeffs))
    phi, y = 0.3, -0.8
    z = phi + 1j * y
    j = f_jet(ans, phi, y)
    assert np.isclose(j.f_zz, 2 * np.conj(z) ** 2)
    assert np.isclose(j.f_zzbar, 4 * abs(z) ** 2)
    assert np.isclose(j.f_zzzbar, 4 * np.conj(z))
    assert abs(j.f_zzz) < 1e-14 and abs(j.f_zzzz) < 1e-14 and abs(j.f_zzzzbar) < 1e-14


def test_raw_fd_oracle_on_polynomial():
    coeffs = np.zeros((5, 5))
    coeffs[3, 1] = 0.7
    coeffs[1, 2] = -1.1
    coeffs[4, 0] = 0.2

    def f(phi, y):
        return 0.7 * phi**3 * y - 1.1 * phi * y**2 + 0.2 * phi**4

    exact = _jet_array(f_jet(FAnsatz(raw=polynomial_partials(coeffs)), 0.4, 0.9))
    approx = _jet_array(fd_oracle(f, 0.4, 0.9))
    assert np.max(np.abs(exact - approx)) < 1e-8


def test_non_integrable_example_fails():
    # the metric (1 + phi^2 y) (dphi^2 + dy^2) is generic: nonzero residual
    coeffs = np.zeros((5, 5))
    coeffs[2, 0] = coeffs[0, 2] = 0.25
    coeffs[4, 1] = 1.0 / 12.0
    j = f_jet(FAnsatz(raw=polynomial_partials(coeffs)), 0.5, 0.7)
    assert abs(criterion_residual(j)) > 1e-3


@settings(max_examples=15)
@given(st.floats(-1.5, 6.0), st.floats(0.0, 2 * np.pi), st.floats(-2.0, 2.0), st.floats(-3, 3), st.floats(-3, 3))
def test_criterion_property(a, phi, y, c, d1):
    usol = solve_u(FamilyParams(a), 0.0, (-2.5, 2.5))
    rel = relative_residual(f_jet(FAnsatz(usol, D_ZERO, c=c, d1=d1), phi, y))
    assert rel < 1e-9


def test_random_grid_mode(usols):
    rep = check_grid(FAnsatz(usols[0.0], D_ZERO, c=1.0), shape=(10, 10), rng=np.random.default_rng(3))
    again = check_grid(FAnsatz(usols[0.0], D_ZERO, c=1.0), shape=(10, 10), rng=np.random.default_rng(3))
    assert rep.points == 100 and rep == again


def test_mode_validation(usols):
    with pytest.raises(BadParams):
        FAnsatz(usols[0.0], D_ZERO, d=1.0)
    with pytest.raises(BadParams):
        FAnsatz(usols[0.0], D_NONZERO, d=0.0)
    with pytest.raises(BadParams):
        FAnsatz(usols[0.0], "other")
