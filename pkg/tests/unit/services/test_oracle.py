import numpy as np
import pytest

from fundsol.schemas.run import Budgets, LerayEstimator
from fundsol.services.errors import CaseMismatch, HypothesisViolated, OutsideConvergenceRegion, PoleOrderExceeded
from fundsol.services.oracle import (
    ContinuationOracle,
    adjudicate,
    continuity_check,
    laurent_fit,
    proof_constants,
    pv_crosscheck,
    sample_M,
)
from fundsol.services.quadrature import chebyshev_points
from fundsol.services.solution import SolutionFunctional
from fundsol.services.testfn import gaussian


def planted(zeta):
    return 1.0 / zeta**2 + 3.0 / zeta + 7.0 + 2.0 * zeta


@pytest.fixture
def planted_samples():
    zetas = np.sort(0.02 + 0.125 * (chebyshev_points(20) + 1.0))
    return [(float(z), planted(z)) for z in zetas]


@pytest.fixture(scope="module")
def hyperbolic_oracle(hyperbolic2d):
    return ContinuationOracle.for_symbol(hyperbolic2d, Budgets(sample_budget=4000), seed=7)


def test_laurent_fit_recovers_planted_model(planted_samples):
    fit = laurent_fit(planted_samples)

    # Verify the result
    assert (fit.pole_order, fit.regular_order) == (2, 1)
    assert fit.a0.value == pytest.approx(7.0, abs=1e-8)
    assert fit.coefficient(-2) == pytest.approx(1.0, rel=1e-8)
    assert fit.coefficient(-1) == pytest.approx(3.0, rel=1e-8)
    assert fit.coefficient(5) == 0


def test_laurent_fit_needs_twelve_samples(planted_samples):
    with pytest.raises(ValueError):
        laurent_fit(planted_samples[:11])


def test_laurent_fit_pole_order_cap(planted_samples):
    with pytest.raises(PoleOrderExceeded):
        laurent_fit(planted_samples, pole_order_cap=0)


@pytest.mark.parametrize("k", range(1, 9))
def test_proof_constants_agree(k):
    table = proof_constants(k)
    assert table.max_relative_error <= 1e-10


def test_proof_constants_k1():
    table = proof_constants(1)
    assert table.closed("h(0)") == pytest.approx(-0.5)
    assert table.closed("2k h(0)") == pytest.approx(-1.0)
    assert table.closed("h'(0)") == pytest.approx(-1.0)
    assert table.closed("m(0)") == pytest.approx(0.25)


def test_proof_constants_range():
    with pytest.raises(ValueError):
        proof_constants(9)


def test_abscissae(hyperbolic_oracle):
    zetas = hyperbolic_oracle.abscissae()
    assert hyperbolic_oracle.sigma0 == 0.0
    assert np.all(np.diff(zetas) > 0)
    assert zetas[0] > 0.02
    assert zetas[-1] < 0.02 + 1.0 / 8.0


def test_outside_convergence_region(hyperbolic_oracle, centered2d):
    with pytest.raises(OutsideConvergenceRegion):
        hyperbolic_oracle.sample_M(centered2d, 0.0)


def test_wave_at_zeta_one(wave, centered3d):
    # M(1) = (2 pi)^{-3} integral p g^ dxi = 2 - 1 for the centered unit Gaussian
    budgets = Budgets(sample_budget=8000, quadrature_level=64, estimator=LerayEstimator.CURVE_TRACE_N3)
    assert sample_M(wave, centered3d, 1.0, budgets, seed=7) == pytest.approx(1.0, rel=1e-3)


@pytest.mark.asyncio
async def test_sample_many_keeps_order(hyperbolic_oracle):
    f = gaussian((0.5, 0.25), 1.0)
    zetas = [0.3, 0.1, 0.2]
    samples = await hyperbolic_oracle.sample_many(f, zetas, chunks=2)

    # Verify the result
    assert [s.zeta for s in samples] == zetas
    direct = hyperbolic_oracle.sample_M(f, 0.1)
    assert samples[1].value.value == pytest.approx(direct.value.value, rel=1e-12)


@pytest.mark.asyncio
async def test_sample_many_empty(hyperbolic_oracle, centered2d):
    assert await hyperbolic_oracle.sample_many(centered2d, []) == []


def test_continuity_check_laplace(laplace2d, centered2d):
    # M(zeta) = 2^zeta Gamma(1 + zeta) here
    check = continuity_check(laplace2d, centered2d)
    assert check.relative_error <= 1e-6


def test_continuity_check_needs_a_positive_symbol(wave, centered3d):
    with pytest.raises(HypothesisViolated):
        continuity_check(wave, centered3d)


def test_pv_crosscheck_needs_case_a(hyperbolic2d, centered2d):
    sf = SolutionFunctional(hyperbolic2d, budgets=Budgets(sample_budget=4000), seed=7)
    with pytest.raises(CaseMismatch):
        pv_crosscheck(sf, centered2d)


@pytest.mark.slow
def test_adjudicate_case_b(hyperbolic2d):
    sf = SolutionFunctional(hyperbolic2d, budgets=Budgets(sample_budget=4000), seed=7)
    f = gaussian((0.5, 0.25), 1.0, label="shifted")
    result = adjudicate(sf, f)
    assert min(result.theorem_relative_error, result.proof_relative_error) <= 2e-2


@pytest.mark.slow
def test_adjudicate_case_a(wave):
    budgets = Budgets(sample_budget=8000, quadrature_level=64, estimator=LerayEstimator.CURVE_TRACE_N3)
    sf = SolutionFunctional(wave, budgets=budgets, seed=7)
    result = adjudicate(sf, gaussian((1.0, 0.0, 0.0), 1.0, label="g1"))

    # Verify the result: no Case B term, so both variants carry eval_A
    assert result.case == "A"
    assert result.theorem_value.value == result.proof_value.value
    assert result.theorem_relative_error <= 2e-2
