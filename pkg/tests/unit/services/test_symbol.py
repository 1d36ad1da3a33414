import numpy as np
import pytest
from pydantic import ValidationError

from fundsol.schemas.symbol import SymbolSpec, ValidationTolerances
from fundsol.services.errors import DegenerateSymbol, DegreeError
from fundsol.services.polynomial import Polynomial
from fundsol.services.sphere import random_rotation
from fundsol.services.symbol import HomogeneousSymbol, validate_hypothesis


@pytest.fixture
def directions():
    x = np.random.default_rng(11).standard_normal((20, 3))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def test_loaded_symbol(wave):
    assert (wave.n, wave.k) == (3, 2)
    assert wave.name == "wave"
    assert wave.evaluate(np.array([0.0, 0.0, 1.0])) == pytest.approx(-1.0)


def test_homogeneity(wave, directions):
    np.testing.assert_allclose(wave(2.5 * directions), 2.5**2 * wave(directions), rtol=1e-12)


def test_gradient_matches_finite_differences(wave, directions):
    h = 1e-6
    grad = wave.gradient(directions)
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        fd = (wave(directions + step) - wave(directions - step)) / (2 * h)
        np.testing.assert_allclose(grad[:, axis], fd, rtol=1e-6, atol=1e-8)


def test_tangential_gradient_is_tangent(wave, directions):
    tangential = wave.tangential_gradient(directions)
    np.testing.assert_allclose(np.sum(tangential * directions, axis=1), 0.0, atol=1e-12)


def test_rotated_symbol(wave, directions):
    rotation = random_rotation(3, seed=5)
    np.testing.assert_allclose(wave.rotated(rotation)(directions), wave(directions @ rotation.T), rtol=1e-10)


def test_sphere_extrema(wave):
    low, high = wave.sphere_extrema
    assert low == pytest.approx(-1.0, abs=1e-3)
    assert high == pytest.approx(1.0, abs=1e-3)
    assert wave.sup_norm() == pytest.approx(1.0, abs=1e-3)


def test_spec_roundtrip(wave):
    again = HomogeneousSymbol.from_spec(wave.to_spec())
    assert again.polynomial == wave.polynomial


def test_rejects_inhomogeneous_polynomial():
    with pytest.raises(DegreeError):
        HomogeneousSymbol(Polynomial.from_monomials([((2, 0), 1.0), ((1, 0), 1.0)], 2))


def test_rejects_constant_symbol():
    with pytest.raises(DegreeError):
        HomogeneousSymbol(Polynomial.constant(1.0, 2))


def test_spec_rejects_wrong_degree():
    with pytest.raises(ValidationError):
        SymbolSpec(n=2, k=2, monomials=[{"alpha": [1, 0], "coeff": 1.0}])


def test_spec_rejects_wrong_length():
    with pytest.raises(ValidationError):
        SymbolSpec(n=3, k=2, monomials=[{"alpha": [1, 1], "coeff": 1.0}])


def test_spec_rejects_zero_symbol():
    with pytest.raises(ValidationError):
        SymbolSpec(n=2, k=1, monomials=[{"alpha": [1, 0], "coeff": 0.0}])


def test_wave_satisfies_h(wave):
    validation = validate_hypothesis(wave, sample_budget=8000)

    # Verify the result
    assert validation.passes_h
    assert not validation.empty_characteristic_set
    samples = np.asarray(validation.characteristic_samples)
    assert samples.shape[1] == 3
    np.testing.assert_allclose(wave(samples), 0.0, atol=1e-9)
    # |grad_t p| = 2 on the cone
    assert validation.min_tangential_gradient_norm == pytest.approx(2.0, rel=1e-3)
    # eps = 0.5 * min |p| over {|grad_t p| < 1} = 0.5 cos(pi / 6)
    assert validation.epsilon == pytest.approx(0.5 * np.cos(np.pi / 6), rel=2e-2)


def test_validation_is_reproducible(hyperbolic2d):
    first = validate_hypothesis(hyperbolic2d, sample_budget=2000, seed=3)
    second = validate_hypothesis(hyperbolic2d, sample_budget=2000, seed=3)
    assert first == second


def test_epsilon_override(hyperbolic2d):
    validation = validate_hypothesis(
        hyperbolic2d, sample_budget=2000, tolerances=ValidationTolerances(epsilon_override=0.1)
    )
    assert validation.epsilon == 0.1
    assert validation.epsilon_overridden


def test_definite_symbol_has_empty_characteristic_set(laplace2d):
    validation = validate_hypothesis(laplace2d, sample_budget=2000)
    assert validation.passes_h
    assert validation.empty_characteristic_set
    assert validation.characteristic_samples == []
    assert validation.epsilon == pytest.approx(0.5)


def test_degenerate_symbol_raises(degenerate3d):
    with pytest.raises(DegenerateSymbol) as info:
        validate_hypothesis(degenerate3d, sample_budget=4000)

    # grad p vanishes where two coordinates vanish, e.g. at the poles
    directions = np.abs(np.asarray(info.value.directions))
    assert directions.size > 0
    assert np.all(np.sort(directions, axis=1)[:, 1] < 1e-3)


def test_degenerate_symbol_reports_without_raising(degenerate3d):
    validation = validate_hypothesis(degenerate3d, sample_budget=4000, raise_on_degenerate=False)
    assert not validation.passes_h
    assert validation.offending_directions


@pytest.mark.parametrize("name", ["wave", "hyperbolic2d", "cubic3d"])
def test_euler_identity(request, name):
    sym = request.getfixturevalue(name)
    xi = 1.7 * np.random.default_rng(2).standard_normal((25, sym.n))
    np.testing.assert_allclose(np.sum(xi * sym.gradient(xi), axis=1), sym.k * sym(xi), rtol=1e-10, atol=1e-10)


def test_validation_under_rescaling(wave):
    base = validate_hypothesis(wave, sample_budget=4000, seed=3)
    scaled = validate_hypothesis(wave.scaled(3.0), sample_budget=4000, seed=3)

    # Verify the result: eps and the gradient bound scale with the symbol
    assert scaled.passes_h == base.passes_h
    assert scaled.epsilon == pytest.approx(3.0 * base.epsilon, rel=1e-6)
    assert scaled.min_tangential_gradient_norm == pytest.approx(3.0 * base.min_tangential_gradient_norm, rel=1e-6)


def test_validation_under_rotation(wave):
    base = validate_hypothesis(wave, sample_budget=8000)
    rotated = validate_hypothesis(wave.rotated(random_rotation(3, seed=5)), sample_budget=8000)

    # Verify the result
    assert rotated.passes_h and base.passes_h
    assert rotated.min_tangential_gradient_norm == pytest.approx(2.0, rel=1e-3)
    assert rotated.epsilon == pytest.approx(base.epsilon, rel=5e-2)
