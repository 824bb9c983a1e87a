import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from quarticflow.jets import Jet

xs = st.floats(0.2, 3.0)


def _fd(f, x, h=1e-4):
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    return d1, d2


@given(xs)
def test_composite_matches_finite_differences(x):
    def f(t):
        return np.sqrt(1 + t**4) / (t + 2.0) - 3.0 * t * t

    J = Jet.variable(x)
    J = (1 + J**4).sqrt() / (J + 2.0) - 3.0 * J * J
    d1, d2 = _fd(f, x)
    assert np.isclose(J.v, f(x), rtol=1e-14)
    assert np.isclose(J.d1, d1, rtol=1e-7, atol=1e-7)
    assert np.isclose(J.d2, d2, rtol=1e-5, atol=1e-5)


@given(xs, xs)
def test_reciprocal_and_rsub(x, c):
    J = Jet.variable(x)
    r = c - 1.0 / J
    assert np.isclose(r.d1, 1.0 / x**2)
    assert np.isclose(r.d2, -2.0 / x**3)


def test_compose_is_chain_rule():
    J = Jet.variable(0.7) * 2.0
    s = J.compose(np.sin(J.v), np.cos(J.v), -np.sin(J.v))
    assert np.isclose(s.d1, 2 * np.cos(1.4))
    assert np.isclose(s.d2, -4 * np.sin(1.4))
