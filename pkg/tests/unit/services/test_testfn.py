import numpy as np
import pytest

from fundsol.schemas.testfn import TestFunctionSpec
from fundsol.services.errors import DimensionMismatch, NonPositiveScale, NonPositiveWidth, OrderCapExceeded
from fundsol.services.polynomial import Polynomial
from fundsol.services.testfn import SpectralCombination, from_spec, gaussian


@pytest.fixture
def shifted():
    return gaussian((1.0, 0.0, -0.5), 0.8, label="shifted")


@pytest.fixture
def with_prefactor():
    # f(x) = (1 + x_1 x_2) exp(-|x - a|^2 / 2)
    q = Polynomial.from_monomials([((0, 0, 0), 1.0), ((1, 1, 0), 1.0)], 3)
    return gaussian((0.0, 0.5, 0.0), 1.0, prefactor=q, label="q")


@pytest.fixture
def points():
    return np.random.default_rng(4).standard_normal((7, 3))


def test_hat_of_centered_gaussian(centered3d, points):
    expected = (2 * np.pi) ** 1.5 * np.exp(-0.5 * np.sum(points**2, axis=1))
    np.testing.assert_allclose(centered3d.hat(points), expected, rtol=1e-13)


def test_hat_of_shifted_gaussian(shifted, points):
    a = np.array([1.0, 0.0, -0.5])
    expected = (2 * np.pi * 0.64) ** 1.5 * np.exp(-1j * points @ a - 0.32 * np.sum(points**2, axis=1))
    np.testing.assert_allclose(shifted.hat(points), expected, rtol=1e-13)


def test_prefactor_hat_against_direct_quadrature(with_prefactor):
    # f^(xi) for a separable Gaussian: compare one frequency with a tensor Gauss-Hermite sum
    x, w = np.polynomial.hermite_e.hermegauss(40)
    grid = np.stack(np.meshgrid(x, x + 0.5, x, indexing="ij"), axis=-1).reshape(-1, 3)
    weights = np.einsum("i,j,k->ijk", w, w, w).reshape(-1)
    xi = np.array([0.3, -0.7, 0.2])
    q = 1.0 + grid[:, 0] * grid[:, 1]
    direct = np.sum(weights * q * np.exp(-1j * grid @ xi))
    assert with_prefactor.hat(xi[None, :])[0] == pytest.approx(direct, rel=1e-10)


def test_hat_deriv_matches_finite_differences(with_prefactor, points):
    h = 1e-5
    step = np.array([0.0, h, 0.0])
    fd = (with_prefactor.hat(points + step) - with_prefactor.hat(points - step)) / (2 * h)
    np.testing.assert_allclose(with_prefactor.hat_deriv((0, 1, 0), points), fd, rtol=1e-6, atol=1e-8)


def test_second_hat_deriv(shifted, points):
    h = 1e-4
    step = np.array([h, 0.0, 0.0])
    fd = (shifted.hat(points + step) - 2 * shifted.hat(points) + shifted.hat(points - step)) / h**2
    np.testing.assert_allclose(shifted.hat_deriv((2, 0, 0), points), fd, rtol=1e-5, atol=1e-6)


def test_hat_deriv_order_cap(shifted, points):
    with pytest.raises(OrderCapExceeded):
        shifted.hat_deriv((5, 5, 5), points, order_cap=12)


def test_hat_deriv_uncapped_by_default(centered3d):
    # d^6/dx^6 exp(-x^2 / 2) at 0 is He_6(0) = -15 on each axis
    value = centered3d.hat_deriv((6, 6, 6), np.zeros((1, 3)))[0]
    assert value == pytest.approx((2 * np.pi) ** 1.5 * (-15.0) ** 3, rel=1e-12)


def test_ray_derivatives(with_prefactor):
    theta = np.array([[0.0, 0.6, 0.8], [1.0, 0.0, 0.0]])
    r, h = 0.7, 1e-4
    ray = with_prefactor.ray(theta)
    table = ray.derivatives(r, 2)
    np.testing.assert_allclose(table[0], with_prefactor.hat(r * theta), rtol=1e-12)
    fd1 = (with_prefactor.hat((r + h) * theta) - with_prefactor.hat((r - h) * theta)) / (2 * h)
    np.testing.assert_allclose(table[1], fd1, rtol=1e-6, atol=1e-8)
    fd2 = (
        with_prefactor.hat((r + h) * theta) - 2 * with_prefactor.hat(r * theta) + with_prefactor.hat((r - h) * theta)
    ) / h**2
    np.testing.assert_allclose(table[2], fd2, rtol=1e-4, atol=1e-5)


def test_apply_symbol_multiplies_the_hat(wave, shifted, points):
    qf = shifted.apply_symbol(wave)
    np.testing.assert_allclose(qf.hat(points), wave(points) * shifted.hat(points), rtol=1e-12)
    assert qf.value_at_zero is None


def test_apply_symbol_dimension_mismatch(hyperbolic2d, shifted):
    with pytest.raises(DimensionMismatch):
        shifted.apply_symbol(hyperbolic2d)


def test_dilate(shifted, points):
    lam = 1.7
    dilated = shifted.dilate(lam)
    np.testing.assert_allclose(dilated.hat(points), lam**-3 * shifted.hat(points / lam), rtol=1e-12)
    assert dilated.value_at_zero == pytest.approx(shifted.value_at_zero)
    with pytest.raises(NonPositiveScale):
        shifted.dilate(0.0)


def test_dilate_after_apply_symbol(wave, shifted, points):
    lam = 0.6
    qf = shifted.apply_symbol(wave)
    np.testing.assert_allclose(qf.dilate(lam).hat(points), lam**-3 * qf.hat(points / lam), rtol=1e-11)


def test_value_at_zero(shifted, with_prefactor):
    assert shifted.value_at_zero == pytest.approx(np.exp(-1.25 / (2 * 0.64)))
    assert with_prefactor.value_at_zero == pytest.approx(np.exp(-0.125))


def test_non_positive_width():
    with pytest.raises(NonPositiveWidth):
        gaussian((0.0, 0.0), 0.0)


def test_combination(centered3d, shifted, points):
    combo = 2.0 * centered3d - shifted
    assert isinstance(combo, SpectralCombination)
    np.testing.assert_allclose(combo.hat(points), 2.0 * centered3d.hat(points) - shifted.hat(points), rtol=1e-13)
    assert combo.value_at_zero == pytest.approx(2.0 - shifted.value_at_zero)
    assert combo.sigma_bounds == (0.8, 1.0)
    theta = points / np.linalg.norm(points, axis=1, keepdims=True)
    np.testing.assert_allclose(
        combo.ray(theta).derivatives(0.5, 1),
        2.0 * centered3d.ray(theta).derivatives(0.5, 1) - shifted.ray(theta).derivatives(0.5, 1),
        rtol=1e-12,
    )


def test_combination_dimension_mismatch(centered3d, centered2d):
    with pytest.raises(DimensionMismatch):
        centered3d + centered2d


def test_from_spec():
    spec = TestFunctionSpec(center=[0.0, 1.0], sigma=0.5, poly=[{"alpha": [1, 0], "coeff": 2.0}], label="g")
    f = from_spec(spec)
    assert f.dimension == 2
    assert f.label == "g"
    # q(0) = 0
    assert f.value_at_zero == pytest.approx(0.0)
