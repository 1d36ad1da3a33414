import numpy as np
import pytest
from scipy.integrate import quad

from fundsol.schemas.run import LogBracketSpec
from fundsol.services.errors import NonfiniteProfile, WindowTooSmall
from fundsol.services.leray import LerayFamily, LerayProfile
from fundsol.services.pairing import (
    BracketFunctional,
    Cutoff,
    LogKernel,
    LorentzKernel,
    PowerKernel,
    log_bracket,
    log_bracket_scan,
)
from fundsol.services.symbol import validate_hypothesis
from fundsol.services.testfn import gaussian

EPSILON = 0.4


def density(u):
    # not even in u, so every bracket below is nonzero
    return (1.0 + u) * (1.0 - u * u) ** 2


@pytest.fixture
def profile():
    return LerayProfile.from_density(density, (-1.0, 1.0), EPSILON)


@pytest.fixture(scope="module")
def hyperbolic_family(hyperbolic2d):
    return LerayFamily(hyperbolic2d, validate_hypothesis(hyperbolic2d, sample_budget=4000))


def test_cutoff_shape():
    chi = Cutoff(0.2)
    np.testing.assert_allclose(chi(np.array([0.0, 0.1, -0.1, 0.2, 0.5])), [1, 1, 1, 0, 0], atol=1e-15)
    assert chi(np.array([0.15]))[0] == pytest.approx(0.5)
    # chi' = 0 at both ends of the transition
    np.testing.assert_allclose(chi.derivative(np.array([0.1, 0.2])), 0.0, atol=1e-15)


def test_log_bracket_first_power(profile):
    # <log|u| ; L'> = integral log|u| L'(u) du = -16/15
    assert log_bracket(profile) == pytest.approx(-16.0 / 15.0, rel=1e-7)


def test_log_bracket_second_power(profile):
    # <log^2|u| ; L'> = 2 integral_0^1 log^2(u) (1 - 6u^2 + 5u^4) du = 736/225
    assert log_bracket(profile, LogBracketSpec(power=2)) == pytest.approx(736.0 / 225.0, rel=1e-7)


@pytest.mark.parametrize("power", [1, 2])
def test_log_bracket_does_not_depend_on_rho(profile, power):
    wide = log_bracket(profile, LogBracketSpec(power=power, rho=0.5 * EPSILON))
    narrow = log_bracket(profile, LogBracketSpec(power=power, rho=0.25 * EPSILON))
    assert abs(wide - narrow) <= 1e-6 * abs(wide)


def test_rho_beyond_the_window(profile):
    with pytest.raises(WindowTooSmall):
        log_bracket(profile, LogBracketSpec(rho=0.9 * EPSILON))


def test_nonfinite_profile(profile):
    broken = profile.scaled(np.nan)
    with pytest.raises(NonfiniteProfile):
        log_bracket(broken)


@pytest.mark.parametrize("zeta", [0.3, 0.75])
def test_power_kernel(profile, zeta):
    # integral |u|^{2 zeta - 1} sgn(u) L(u) du keeps the odd part u (1 - u^2)^2
    s = 2.0 * zeta
    expected = 2.0 * (1.0 / (s + 1.0) - 2.0 / (s + 3.0) + 1.0 / (s + 5.0))
    assert PowerKernel(zeta).pair(profile) == pytest.approx(expected, rel=1e-7)


def test_power_kernel_needs_positive_zeta():
    with pytest.raises(ValueError):
        PowerKernel(0.0)


def test_lorentz_kernel(profile):
    a, delta = 1.3, 0.05
    expected, _ = quad(lambda u: 2.0 * a * u * u * (1.0 - u * u) ** 2 / (a * a * u * u + delta**2), 0.0, 1.0, limit=200)
    assert LorentzKernel(a, delta).pair(profile) == pytest.approx(expected, rel=1e-8)


def test_lorentz_kernel_parameters():
    with pytest.raises(ValueError):
        LorentzKernel(1.0, 0.0)


def test_functional_matches_profile_pairing(hyperbolic_family):
    kernel = LogKernel(LogBracketSpec(), hyperbolic_family.epsilon)
    functional = BracketFunctional(hyperbolic_family, kernel)
    h = lambda theta: np.cos(theta[:, 0]) + 0.3 * theta[:, 1] ** 3  # noqa: E731

    values = h(functional.points)
    assert functional(values) == pytest.approx(kernel.pair(hyperbolic_family.profile(h)), rel=1e-10)


def test_log_bracket_of_an_even_profile_vanishes(hyperbolic_family):
    # p(-xi_1, xi_2) = -p, so L(1) is even and the odd kernel log|u|' sees nothing
    profile = hyperbolic_family.profile(lambda theta: np.ones(theta.shape[0]))
    assert abs(log_bracket(profile)) < 1e-8


def test_bracket_scan(hyperbolic_family, tmp_path):
    f = gaussian((1.0, 0.3), 1.0)
    scan = log_bracket_scan(hyperbolic_family, f, [0.0, 0.5, 1.0])

    # Verify the result: each column is the bracket of h_r = f^(r .)
    assert set(scan.values) == {1, 2}
    h = f.hat(0.5 * hyperbolic_family.points)
    expected = log_bracket(hyperbolic_family.profile(h), LogBracketSpec(power=2))
    assert abs(expected) > 1e-3
    assert scan.values[2][1] == pytest.approx(expected, rel=1e-10)

    path = scan.to_csv(tmp_path / "scan.csv")
    assert path.read_text().splitlines()[0] == "r,bracket_j1,bracket_j2,bracket_j1_imag,bracket_j2_imag"
