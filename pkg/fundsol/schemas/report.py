from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field

from .run import Budgets, LerayEstimator, Variant
from .symbol import SymbolSpec, SymbolValidation


class ComplexValue(BaseModel):
    real: float
    imag: float = 0.0

    @classmethod
    def of(cls, z: complex) -> "ComplexValue":
        z = complex(z)
        return cls(real=z.real, imag=z.imag)

    @property
    def value(self) -> complex:
        return complex(self.real, self.imag)

    def __abs__(self) -> float:
        return abs(self.value)


class Provenance(BaseModel):
    """Everything needed to reproduce a report; no timestamps."""

    package: str
    package_version: str
    python_version: str
    numpy_version: str
    scipy_version: str
    mpmath_version: str
    command: str
    config: Dict[str, Any] = Field(default_factory=dict)
    budgets: Budgets
    seed: int
    variant: Variant
    cutoff_shape: str
    estimator: Optional[LerayEstimator] = None


class SolutionConstants(BaseModel):
    """Special-function constants of one degree k."""

    k: int
    euler_gamma: float
    gamma_2k: float
    gamma_1p2k: float
    gamma_k: float
    digamma_k: float
    digamma_2k: float
    theorem_coefficient: float = Field(..., description="(gamma + Psi(k)) / Gamma(2k)")
    proof_coefficient: float = Field(..., description="(gamma + Psi(2k)) / Gamma(2k)")
    log_square_coefficient: float = Field(..., description="2 m(0) = 1 / Gamma(1 + 2k)")
    log_integral_coefficient: float = Field(..., description="2k h(0) = -1 / Gamma(2k)")
    orientation: float = Field(..., description="Global sign of the bracket assemblies")


class CaseBTerms(BaseModel):
    """Raw radial functionals of case B and the coefficients they are weighted with."""

    boundary_log: ComplexValue = Field(..., description="d^{2k-1}(r^{k+n-1} F_1)|_0")
    boundary_log_square: ComplexValue = Field(..., description="d^{2k-1}(r^{k+n-1} F_2)|_0")
    log_weighted_integral: ComplexValue = Field(..., description="integral log r d^{2k}(r^{k+n-1} F_1) dr")
    term1_theorem: ComplexValue
    term1_proof: ComplexValue
    term2: ComplexValue
    term3: ComplexValue


class EvaluationResult(BaseModel):
    test_function: str
    case: Literal["A", "B"]
    variant: Variant
    value: ComplexValue
    value_theorem: Optional[ComplexValue] = None
    value_proof: Optional[ComplexValue] = None
    null_value: Optional[ComplexValue] = None
    terms: Optional[CaseBTerms] = None
    f_at_zero: Optional[ComplexValue] = None
    case_b_invoked: bool
    epsilon: float
    eta: float
    rho: float
    radial_truncation: float
    radial_core: float
    radial_nodes: int


class HomogeneityFit(BaseModel):
    """lambda^k <s, f_lambda> fitted as intercept + slope log(lambda)."""

    lambdas: List[float]
    values: List[ComplexValue]
    slope: ComplexValue
    intercept: ComplexValue
    residual: float = Field(..., description="Relative collinearity residual")
    spread: float = Field(..., description="Relative spread of the values (0 for exact homogeneity)")


class CheckResult(BaseModel):
    name: str
    passed: bool
    measured: float
    tolerance: float
    asserted: bool = True
    detail: str = ""


class LaurentFit(BaseModel):
    """M(zeta) ~ sum_{j=-d}^{q} a_j zeta^j fitted in the convergence region."""

    abscissae: List[float]
    samples: List[ComplexValue]
    pole_order: int = Field(..., ge=0, le=2)
    regular_order: int = Field(..., ge=0)
    coefficients: List[ComplexValue] = Field(..., description="a_{-d}, ..., a_q")
    residual: float
    condition: float
    a0: ComplexValue
    a0_uncertainty: float

    def coefficient(self, j: int) -> complex:
        index = j + self.pole_order
        if index < 0 or index >= len(self.coefficients):
            return 0j
        return self.coefficients[index].value


class Adjudication(BaseModel):
    symbol: str
    test_function: str
    case: Literal["A", "B"]
    a0: ComplexValue
    a0_uncertainty: float
    theorem_value: ComplexValue
    proof_value: ComplexValue
    theorem_relative_error: float
    proof_relative_error: float
    winner: Literal["theorem", "proof", "indistinguishable"]
    pole_minus_one: ComplexValue
    pole_minus_two: ComplexValue
    fit: LaurentFit


class ProofConstantValue(BaseModel):
    name: str
    closed_form: float
    numerical: float
    relative_error: float


class ProofConstants(BaseModel):
    k: int = Field(..., ge=1, le=8)
    values: List[ProofConstantValue]
    max_relative_error: float

    def closed(self, name: str) -> float:
        return next(v.closed_form for v in self.values if v.name == name)


class ConvergenceRow(BaseModel):
    budget_scale: float
    check: str
    measured: float


class ValidationReport(BaseModel):
    provenance: Provenance
    symbol: SymbolSpec
    validation: SymbolValidation


class EvaluationReport(BaseModel):
    provenance: Provenance
    symbol: SymbolSpec
    validation: SymbolValidation
    constants: SolutionConstants
    results: List[EvaluationResult]
    scan_files: List[str] = Field(default_factory=list)


class VerificationReport(BaseModel):
    provenance: Provenance
    symbol: SymbolSpec
    validation: SymbolValidation
    checks: List[CheckResult]
    adjudications: List[Adjudication] = Field(default_factory=list)
    convergence: List[ConvergenceRow] = Field(default_factory=list)
    passed: bool


class ConstantsReport(BaseModel):
    provenance: Provenance
    table: List[ProofConstants]


class LerayReport(BaseModel):
    provenance: Provenance
    symbol: SymbolSpec
    validation: SymbolValidation
    radius: float
    estimator: LerayEstimator
    epsilon: float
    eta: float
    fit_residual: float
    total_mass: ComplexValue
    profile_file: str
    scan_file: str


class MSample(BaseModel):
    zeta: float
    value: ComplexValue
    error: float = Field(..., ge=0, description="Declared error estimate")
    majorant: float = Field(0.0, ge=0, description="(2 pi)^{-n} sum of |weights| x |values| behind the sample")


class PrincipalValueCheck(BaseModel):
    """Regularised integrals (2 pi)^{-n} integral p f^ / (p^2 + delta^2) and their extrapolants."""

    deltas: List[float]
    values: List[ComplexValue]
    extrapolants: List[ComplexValue]
    ratios: List[float]
    exponent: float
    estimate: ComplexValue
    reference: Optional[ComplexValue] = None
    relative_discrepancy: Optional[float] = None


class ContinuityCheck(BaseModel):
    """(2 pi)^{-n} integral p^zeta f^ sampled on (0, 1/(4k)] and extrapolated to zeta = 0."""

    abscissae: List[float]
    values: List[ComplexValue]
    extrapolated: ComplexValue
    target: ComplexValue
    relative_error: float
