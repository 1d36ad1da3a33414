import numpy as np
import pytest
from scipy.special import beta

from fundsol.services.quadrature import (
    chebyshev_points,
    composite_gauss,
    gauss_jacobi_left,
    gauss_legendre,
    graded_rule,
)


def test_gauss_legendre_polynomial_exactness():
    x, w = gauss_legendre(-1.0, 2.0, 6)
    assert np.sum(w * x**11) == pytest.approx((2.0**12 - 1.0) / 12.0, rel=1e-13)


def test_composite_gauss_drops_coincident_breaks():
    x, w = composite_gauss([0.0, 0.5, 0.5, 1.0], 4, subdivisions=3)
    assert x.size == 2 * 3 * 4
    assert np.sum(w * np.exp(x)) == pytest.approx(np.e - 1.0, rel=1e-13)


def test_graded_rule_resolves_log_singularity():
    x, w = graded_rule(1.0, 40, 8)
    assert np.sum(w * np.log(x)) == pytest.approx(-1.0, rel=1e-10)


@pytest.mark.parametrize("exponent", [-0.6, 0.0, 1.5])
def test_gauss_jacobi_left(exponent):
    # integral over [0, 2] of x^e (2 - x) = 2^{e+2} B(e + 1, 2)
    x, w = gauss_jacobi_left(0.0, 2.0, 10, exponent)
    assert np.sum(w * (2.0 - x)) == pytest.approx(2.0 ** (exponent + 2) * beta(exponent + 1, 2), rel=1e-12)


def test_gauss_jacobi_left_rejects_nonintegrable_weight():
    with pytest.raises(ValueError):
        gauss_jacobi_left(0.0, 1.0, 8, -1.0)


def test_chebyshev_points():
    t = chebyshev_points(5)
    assert np.all(np.diff(t) < 0)
    np.testing.assert_allclose(t, -t[::-1], atol=1e-15)
