import math

import numpy as np
import pytest
from scipy import special

from robinext.errors import ConvergenceError
from robinext.quadrature import semi_infinite


def test_exponential():
    assert semi_infinite(lambda r: np.exp(-r), 0.0, 1.0) == pytest.approx(1.0, rel=1e-14)


def test_shifted_exponential_polynomial():
    # int_2^inf r^2 e^{-3r} dr
    exact = math.exp(-6.0) * (4 / 3 + 4 / 9 + 2 / 27)
    assert semi_infinite(lambda r: r * r * np.exp(-3 * r), 2.0, 1 / 3) == pytest.approx(exact, rel=1e-13)


@pytest.mark.parametrize("omega,a", [(0.4, 1.0), (1.3, 1.0), (4.0, 0.5), (1.0, 3.0)])
def test_bessel_square_closed_form(omega, a):
    x = omega * a
    exact = a * a / 2 * (special.kv(0, x) * special.kv(2, x) - special.kv(1, x) ** 2)
    got = semi_infinite(lambda r: special.kv(1, omega * r) ** 2 * r, a, 1 / omega)
    assert got == pytest.approx(exact, rel=1e-12)


def test_vector_lower_limits():
    lower = np.array([0.0, 1.0, 2.5])
    got = semi_infinite(lambda r: np.exp(-2 * r), lower, 0.5)
    np.testing.assert_allclose(got, np.exp(-2 * lower) / 2, rtol=1e-14)


def test_stacked_integrands():
    got = semi_infinite(lambda r: np.stack([np.exp(-r), r * np.exp(-r)]), 0.0, 1.0)
    np.testing.assert_allclose(got, [1.0, 1.0], rtol=1e-14)


def test_slow_tail_raises():
    with pytest.raises(ConvergenceError):
        semi_infinite(lambda r: 1.0 / (1.0 + r) ** 1.5, 0.0, 1e-3, max_panels=8)


def test_unresolved_integrand_raises():
    with pytest.raises(ConvergenceError):
        semi_infinite(lambda r: np.exp(-r) * np.cos(400 * r) ** 2, 0.0, 1.0, order=4)
