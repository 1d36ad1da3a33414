"""The fundamental solution functional f -> <s, f> and the null solution s_0.

Case A (k < n):

    <s, f> = o (2 pi)^{-n} integral_0^inf F_1(r) r^{n-k-1} dr

Case B (k >= n):

    <s, f> = o (2 pi)^{-n} [ c_1 D(F_1) + 2m(0) D(F_2) + 2k h(0) integral log r d^{2k}(r^{k+n-1} F_1) dr ]

with F_j(r) = <log^j|u| ; L(f^(r .))'(u)>, D(F) = d^{2k-1}(r^{k+n-1} F)|_{r=0},
2m(0) = 1/Gamma(1+2k), 2k h(0) = -1/Gamma(2k) and c_1 = (gamma + Psi(k))/Gamma(2k)
(theorem variant) or (gamma + Psi(2k))/Gamma(2k) (proof variant). The
orientation o = -1 accounts for <log|u| ; L'> = -p.v. integral of L(u)/u du.
The null solution is <s_0, f> = D(F_1).
"""

from __future__ import annotations

import functools
from math import comb, factorial
from typing import Dict, Optional, Sequence

import numpy as np
from loguru import logger
from scipy.special import digamma, gamma

from ..schemas.report import (
    CaseBTerms,
    ComplexValue,
    EvaluationResult,
    HomogeneityFit,
    SolutionConstants,
)
from ..schemas.run import Budgets, LogBracketSpec, Variant
from ..schemas.symbol import SymbolValidation, ValidationTolerances
from .errors import CaseMismatch
from .leray import LerayFamily
from .pairing import BracketFunctional, LogKernel
from .radial import (
    BracketSampler,
    RadialGrid,
    RadialScan,
    boundary_derivative,
    log_weighted_integral,
    radial_moment,
    taylor_at_zero,
    taylor_weight,
)
from .sphere import build_quadrature
from .symbol import HomogeneousSymbol, validate_hypothesis
from .testfn import SpectralFunction

ORIENTATION = -1.0


def build_family(sym: HomogeneousSymbol, validation: SymbolValidation, budgets: Budgets) -> LerayFamily:
    """The Leray family a run's budgets ask for: sphere level, mollifier width, estimator and fit."""
    quad = build_quadrature(sym.n, budgets.sphere_level(sym.n))
    return LerayFamily(
        sym,
        validation,
        quad=quad,
        eta=budgets.mollifier_fraction * validation.epsilon,
        estimator=budgets.estimator,
        fit_degree=budgets.fit_degree,
        fit_points=budgets.fit_points,
    )


def solution_constants(k: int) -> SolutionConstants:
    euler = float(np.euler_gamma)
    g2k = float(gamma(2 * k))
    return SolutionConstants(
        k=k,
        euler_gamma=euler,
        gamma_2k=g2k,
        gamma_1p2k=float(gamma(1 + 2 * k)),
        gamma_k=float(gamma(k)),
        digamma_k=float(digamma(k)),
        digamma_2k=float(digamma(2 * k)),
        theorem_coefficient=(euler + float(digamma(k))) / g2k,
        proof_coefficient=(euler + float(digamma(2 * k))) / g2k,
        log_square_coefficient=1.0 / float(gamma(1 + 2 * k)),
        log_integral_coefficient=-1.0 / g2k,
        orientation=ORIENTATION,
    )


class SolutionFunctional:
    """f -> <s, f> for one symbol, with all node-level data built once."""

    def __init__(
        self,
        sym: HomogeneousSymbol,
        validation: Optional[SymbolValidation] = None,
        budgets: Optional[Budgets] = None,
        variant: Variant = Variant.THEOREM,
        seed: Optional[int] = None,
        epsilon_override: Optional[float] = None,
    ):
        self.symbol = sym
        self.budgets = budgets or Budgets()
        self.variant = variant
        if validation is None:
            validation = validate_hypothesis(
                sym,
                sample_budget=self.budgets.sample_budget,
                tolerances=ValidationTolerances(epsilon_override=epsilon_override),
                seed=seed,
            )
        self.validation = validation
        self.n, self.k = sym.n, sym.k
        self.case = "A" if self.k < self.n else "B"

        self.family = build_family(sym, validation, self.budgets)
        self.bracket_spec = LogBracketSpec.from_budgets(self.budgets)
        powers = (1,) if self.case == "A" else (1, 2)
        self.brackets: Dict[int, BracketFunctional] = {
            j: BracketFunctional(
                self.family, LogKernel(self.bracket_spec.model_copy(update={"power": j}), self.family.epsilon)
            )
            for j in powers
        }
        self.rho = self.brackets[1].kernel.rho  # type: ignore[attr-defined]
        logger.info(f"Solution functional for {sym.name}: case {self.case}, n={self.n}, k={self.k}")

    @functools.cached_property
    def constants(self) -> SolutionConstants:
        return solution_constants(self.k)

    # radial data
    def radial_scan(self, f: SpectralFunction) -> RadialScan:
        if f.dimension != self.n:
            raise CaseMismatch(f"Test function in n={f.dimension} for a symbol in n={self.n}")
        grid = RadialGrid.build(f.sigma_bounds, self.budgets)
        powers = sorted(self.brackets)
        sampler = BracketSampler([self.brackets[j] for j in powers], f)
        order = 0 if self.case == "A" else 2 * self.k
        return RadialScan.build(sampler, grid, order, channels=tuple(f"j{j}" for j in powers))

    def _require(self, case: str, operation: str) -> None:
        if self.case != case:
            raise CaseMismatch(
                f"{operation} needs case {case}, but k={self.k}, n={self.n} is case {self.case}"
            )

    # case A
    def eval_A(self, f: SpectralFunction, scan: Optional[RadialScan] = None) -> complex:
        """<s, f> = o (2 pi)^{-n} integral F_1(r) r^{n-k-1} dr."""
        self._require("A", "eval_A")
        scan = scan or self.radial_scan(f)
        moment = radial_moment(scan, self.n - self.k - 1, "j1")
        return ORIENTATION * (2.0 * np.pi) ** (-self.n) * moment

    # case B
    def case_b_terms(self, f: SpectralFunction, scan: Optional[RadialScan] = None) -> CaseBTerms:
        self._require("B", "eval_B")
        scan = scan or self.radial_scan(f)
        k, n, c = self.k, self.n, self.constants
        d1 = boundary_derivative(scan, k, n, "j1")
        d2 = boundary_derivative(scan, k, n, "j2")
        t3 = log_weighted_integral(scan, k, n, "j1")
        terms = CaseBTerms(
            boundary_log=ComplexValue.of(d1),
            boundary_log_square=ComplexValue.of(d2),
            log_weighted_integral=ComplexValue.of(t3),
            term1_theorem=ComplexValue.of(c.theorem_coefficient * d1),
            term1_proof=ComplexValue.of(c.proof_coefficient * d1),
            term2=ComplexValue.of(c.log_square_coefficient * d2),
            term3=ComplexValue.of(c.log_integral_coefficient * t3),
        )
        logger.debug(
            f"Case B terms: D(F1)={d1:.8g}, D(F2)={d2:.8g}, log integral={t3:.8g}"
        )
        return terms

    def _assemble_b(self, terms: CaseBTerms, variant: Variant) -> complex:
        # The variants differ by (proof - theorem coefficient) * D(F1), and D(F1) is a multiple of
        # pv integral of q_{k-n} / p over the sphere. For n = 3 that integrand is odd; for n = 2 it
        # is a decaying rational function of tan(theta) with real poles. Either way D(F1) = 0, so the
        # variants only separate on synthetic brackets.
        first = terms.term1_proof if variant == Variant.PROOF else terms.term1_theorem
        total = first.value + terms.term2.value + terms.term3.value
        return ORIENTATION * (2.0 * np.pi) ** (-self.n) * total

    def eval_B(
        self, f: SpectralFunction, variant: Optional[Variant] = None, scan: Optional[RadialScan] = None
    ) -> complex:
        variant = variant or self.variant
        return self._assemble_b(self.case_b_terms(f, scan), variant)

    def eval_null(self, f: SpectralFunction, scan: Optional[RadialScan] = None) -> complex:
        """<s_0, f> = d^{2k-1}(r^{k+n-1} F_1)|_0, without prefactor."""
        self._require("B", "eval_null")
        if scan is None:
            return self._null_from_taylor(f)
        return boundary_derivative(scan, self.k, self.n, "j1")

    def _null_from_taylor(self, f: SpectralFunction) -> complex:
        value = taylor_at_zero(f, self.brackets[1], self.k - self.n)
        return complex(comb(2 * self.k - 1, self.k + self.n - 1) * factorial(self.k + self.n - 1) * value)

    def eval_family(self, lam: complex, f: SpectralFunction, variant: Optional[Variant] = None) -> complex:
        """(s + lam s_0)(f)."""
        self._require("B", "eval_family")
        scan = self.radial_scan(f)
        return self.eval_B(f, variant, scan) + lam * self.eval_null(f, scan)

    def __call__(self, f: SpectralFunction) -> complex:
        return self.eval_A(f) if self.case == "A" else self.eval_B(f)

    def evaluate(
        self, f: SpectralFunction, label: Optional[str] = None, scan: Optional[RadialScan] = None
    ) -> EvaluationResult:
        """Dispatch on the case and return the value with its per-term breakdown."""
        scan = scan or self.radial_scan(f)
        f0 = f.value_at_zero
        common = dict(
            test_function=label or getattr(f, "label", "f"),
            case=self.case,
            variant=self.variant,
            f_at_zero=None if f0 is None else ComplexValue.of(f0),
            epsilon=self.family.epsilon,
            eta=self.family.eta,
            rho=self.rho,
            radial_truncation=scan.grid.radius,
            radial_core=scan.grid.r_core,
            radial_nodes=int(scan.grid.nodes.size),
        )
        if self.case == "A":
            value = self.eval_A(f, scan)
            logger.info(f"<s, {common['test_function']}> = {value:.10g} (case A)")
            return EvaluationResult(value=ComplexValue.of(value), case_b_invoked=False, **common)

        terms = self.case_b_terms(f, scan)
        theorem = self._assemble_b(terms, Variant.THEOREM)
        proof = self._assemble_b(terms, Variant.PROOF)
        value = proof if self.variant == Variant.PROOF else theorem
        null = boundary_derivative(scan, self.k, self.n, "j1")
        logger.info(
            f"<s, {common['test_function']}> = {value:.10g} (case B, theorem {theorem:.8g}, proof {proof:.8g}), "
            f"<s0, f> = {null:.6g}"
        )
        return EvaluationResult(
            value=ComplexValue.of(value),
            value_theorem=ComplexValue.of(theorem),
            value_proof=ComplexValue.of(proof),
            null_value=ComplexValue.of(null),
            terms=terms,
            case_b_invoked=True,
            **common,
        )

    # checks
    def delta_residual(self, f: SpectralFunction, lam: complex = 0.0, variant: Optional[Variant] = None) -> float:
        """|<s + lam s_0, Qf> - f(0)| / |f(0)|."""
        target = f.value_at_zero
        if target is None or target == 0:
            raise ValueError("The delta property needs a test function with known nonzero f(0)")
        qf = f.apply_symbol(self.symbol)
        if self.case == "A":
            value = self.eval_A(qf)
        elif lam == 0:
            value = self.eval_B(qf, variant)
        else:
            value = self.eval_family(lam, qf, variant)
        residual = abs(value - target) / abs(target)
        logger.info(f"Delta property for {getattr(f, 'label', 'f')}: <s, Qf> = {value:.10g}, f(0) = {target:.10g}, rel. error {residual:.2e}")
        return float(residual)

    def null_scale(self, f: SpectralFunction) -> float:
        """Absolute majorant of the weighted point sum behind <s_0, f>."""
        self._require("B", "null_scale")
        m = self.k - self.n
        weight = taylor_weight(f, self.family.points, m, 4 * self.k + 4)
        total = np.sum(np.abs(self.brackets[1].coefficients * weight))
        return float(comb(2 * self.k - 1, self.k + self.n - 1) * factorial(self.k + self.n - 1) * total)

    def quasi_homogeneity(self, f: SpectralFunction, lambdas: Sequence[float] = (0.5, 1.0, 2.0)) -> HomogeneityFit:
        """Fit lambda^k <s, f_lambda> = intercept + slope log(lambda).

        Residual and spread are relative to max(|values|, |f(0)|); <s, f> may vanish by symmetry.
        """
        lambdas = [float(lam) for lam in lambdas]
        values = np.array([lam**self.k * self(f.dilate(lam)) for lam in lambdas])
        design = np.stack([np.ones(len(lambdas)), np.log(lambdas)], axis=1)
        coeffs, *_ = np.linalg.lstsq(design.astype(complex), values, rcond=None)
        f0 = f.value_at_zero
        scale = max(float(np.max(np.abs(values))), abs(f0) if f0 is not None else 0.0, 1e-300)
        residual = float(np.linalg.norm(design @ coeffs - values) / scale)
        spread = float((np.max(np.abs(values - values.mean()))) / scale)
        return HomogeneityFit(
            lambdas=lambdas,
            values=[ComplexValue.of(v) for v in values],
            slope=ComplexValue.of(coeffs[1]),
            intercept=ComplexValue.of(coeffs[0]),
            residual=residual,
            spread=spread,
        )

    def predict(self, fit: HomogeneityFit, lam: float) -> complex:
        """lambda^k <s, f_lambda> predicted by the fitted affine law."""
        return fit.intercept.value + fit.slope.value * np.log(lam)

