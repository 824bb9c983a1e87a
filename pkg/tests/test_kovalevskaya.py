import numpy as np
import pytest

from quarticflow import PhaseState
from quarticflow.errors import DegenerateCoordinate
from quarticflow.kovalevskaya import (
    KAPPA,
    KAPPA_POTENTIAL,
    _sphere_jacobian,
    chart_to_sphere,
    compare_with_shifted,
    goryachev_reference,
    kovalevskaya_reference,
    match_kovalevskaya,
    sphere_to_chart,
    stereo_to_sphere,
    verify_metric_identity,
)

U, PHI = np.meshgrid(np.geomspace(0.05, 20.0, 50), np.linspace(0, 2 * np.pi, 50), indexing="ij")


@pytest.mark.parametrize("hemisphere", [1, -1])
def test_metric_identity(hemisphere):
    assert verify_metric_identity(U, PHI, hemisphere) < 1e-12


def test_chart_lands_on_sphere_and_inverts():
    for hemi in (1, -1):
        x, y, z = chart_to_sphere(U, PHI, hemi)
        assert np.max(np.abs(x * x + y * y + z * z - 1.0)) < 1e-14
        u, phi, h = sphere_to_chart(x, y, z)
        assert np.allclose(u, U, rtol=1e-10)
        assert np.allclose(np.cos(phi), np.cos(PHI), atol=1e-14) and np.all(h == hemi)


def test_jacobian_against_finite_differences(rng):
    for _ in range(20):
        u, phi, hemi = rng.uniform(0.1, 5.0), rng.uniform(0, 2 * np.pi), rng.choice([1, -1])
        J = _sphere_jacobian(u, phi, hemi)
        h = 1e-6 * u
        du = (np.array(chart_to_sphere(u + h, phi, hemi)) - np.array(chart_to_sphere(u - h, phi, hemi))) / (2 * h)
        dphi = (np.array(chart_to_sphere(u, phi + 1e-6, hemi)) - np.array(chart_to_sphere(u, phi - 1e-6, hemi))) / 2e-6
        assert np.allclose(J[:, 0], du, atol=1e-7) and np.allclose(J[:, 1], dphi, atol=1e-8)


def test_match_with_reference():
    m = match_kovalevskaya(U, PHI)
    assert m["metric_mismatch"] < 1e-10 and m["potential_mismatch"] < 1e-10
    assert abs(m["kappa"] - KAPPA) < 1e-12
    assert abs(m["kappa_potential"] - KAPPA_POTENTIAL) < 1e-12


def test_shifted_family_member():
    c = compare_with_shifted(U, PHI)
    assert c["metric"] < 1e-12 and c["potential_rotated"] < 1e-12
    # the potential agrees only after a half-turn in phi
    assert c["potential"] > 0.1


def test_goryachev_reduces_bitwise():
    ref = kovalevskaya_reference()
    gor = goryachev_reference(0.0, 0.0)
    x, y, z = chart_to_sphere(U, PHI)
    assert np.array_equal(gor.potential(x, y, z), ref.potential(x, y, z))
    assert gor.weights == ref.weights and gor.denominators == ref.denominators
    assert not np.array_equal(goryachev_reference(0.3, 0.0).potential(x, y, z), ref.potential(x, y, z))


def test_pole_charts_are_the_embedded_system(kov, rng):
    # H = T + V with T = (KAPPA / 2) * kinetic form and V = KAPPA_POTENTIAL * (-x)
    ref = kovalevskaya_reference()
    for name, sign in (("N", 1.0), ("S", -1.0)):
        ch = kov.chart(name)
        for _ in range(10):
            z = np.concatenate([rng.uniform(-0.9, 0.9, 2), rng.normal(size=2)])
            qd = ch.rhs(z)[:2]

            def embed(t, z=z, qd=qd):
                x, y, w = stereo_to_sphere(z[0] + t * qd[0], z[1] + t * qd[1])
                return np.array([x, y, sign * w])

            v = (embed(1e-6) - embed(-1e-6)) / 2e-6
            point = embed(0.0)
            T = 0.5 * z[2:] @ qd
            H = ch.hamiltonian(z[:2], z[2:])
            assert abs(T - 0.5 * KAPPA * ref.kinetic(point, v)) < 1e-8 * max(1.0, T)
            assert abs((H - T) - KAPPA_POTENTIAL * ref.potential(*point)) < 1e-12


def test_charts_agree_on_overlaps(kov, rng):
    for _ in range(30):
        s = PhaseState("polar", np.array([rng.uniform(-np.pi, np.pi), rng.uniform(0.5, 0.95)]), rng.normal(size=2))
        H = kov.hamiltonian(s)
        for target in ("N", "S", "kov2"):
            t = kov.convert(s, target)
            assert abs(kov.hamiltonian(t) - H) < 1e-10 * max(1.0, abs(H))
            back = kov.convert(t, "polar")
            assert np.allclose(back.as_array(), s.as_array(), atol=1e-9)


def test_degenerate_coordinate():
    for fn in (verify_metric_identity, compare_with_shifted, match_kovalevskaya):
        with pytest.raises(DegenerateCoordinate):
            fn(np.array([0.0, 1.0]), np.array([0.0, 0.0]))
        with pytest.raises(DegenerateCoordinate):
            fn(-1.0, 0.0)
