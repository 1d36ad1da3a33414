from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from ..config import settings
from .testfn import TestFunctionSpec


class LerayEstimator(str, Enum):
    MOLLIFIED = "mollified-delta"
    CUMULATIVE = "cumulative"
    EXACT_N2 = "exact-n2"
    CURVE_TRACE_N3 = "curve-trace-n3"
    SYNTHETIC = "synthetic"


class Variant(str, Enum):
    """Coefficient of the first case-B term."""

    THEOREM = "theorem"
    PROOF = "proof"
    BOTH = "both"


class Budgets(BaseModel):
    """Numerical budgets of one run. Defaults come from the environment settings."""

    quadrature_level: Optional[int] = Field(None, ge=4, description="Sphere rule level; None picks the per-dimension default")
    sample_budget: int = Field(settings.SAMPLE_BUDGET, ge=1000)
    mollifier_fraction: float = Field(settings.MOLLIFIER_FRACTION, gt=0, le=0.25)
    estimator: Optional[LerayEstimator] = None
    fit_degree: int = Field(settings.FIT_DEGREE, ge=2, le=16)
    fit_points: int = Field(settings.FIT_POINTS, ge=8)
    cutoff_fraction: float = Field(settings.CUTOFF_FRACTION, gt=0, le=0.5)
    log_panels: int = Field(settings.LOG_PANELS, ge=4)
    log_gauss_points: int = Field(settings.LOG_GAUSS_POINTS, ge=2)
    outer_gauss_points: int = Field(settings.OUTER_GAUSS_POINTS, ge=2)
    tail_digits: int = Field(settings.TAIL_DIGITS, ge=6, le=16)
    radial_decades: int = Field(settings.RADIAL_DECADES, ge=1)
    radial_panels_per_decade: int = Field(settings.RADIAL_PANELS_PER_DECADE, ge=1)
    radial_graded_points: int = Field(settings.RADIAL_GRADED_POINTS, ge=1)
    radial_uniform_panels: int = Field(settings.RADIAL_UNIFORM_PANELS, ge=2)
    radial_uniform_points: int = Field(settings.RADIAL_UNIFORM_POINTS, ge=2)
    radial_core: float = Field(settings.RADIAL_CORE, gt=0)
    laurent_samples: int = Field(settings.LAURENT_SAMPLES, ge=12)
    laurent_offset: float = Field(settings.LAURENT_OFFSET, gt=0)
    laurent_max_regular: int = Field(settings.LAURENT_MAX_REGULAR, ge=1)
    oracle_jacobi_points: int = Field(settings.ORACLE_JACOBI_POINTS, ge=8)
    level_scale: float = Field(1.0, gt=0, description="Factor applied to the per-dimension default sphere level")

    @model_validator(mode="after")
    def fit_is_overdetermined(self) -> "Budgets":
        if self.fit_points <= self.fit_degree:
            raise ValueError(
                f"fit_points={self.fit_points} must exceed fit_degree={self.fit_degree}"
            )
        return self

    def scaled(self, factor: float) -> "Budgets":
        """Scale every node-count budget by ``factor`` (``--budget-scale``)."""
        if factor <= 0:
            raise ValueError(f"Budget scale must be positive, got {factor}")
        if factor == 1:
            return self.model_copy()

        def count(value: int, floor: int) -> int:
            return max(floor, int(round(value * factor)))

        return self.model_copy(
            update={
                "quadrature_level": None if self.quadrature_level is None else count(self.quadrature_level, 4),
                "level_scale": self.level_scale * factor,
                "sample_budget": count(self.sample_budget, 1000),
                "radial_panels_per_decade": count(self.radial_panels_per_decade, 1),
                "radial_uniform_panels": count(self.radial_uniform_panels, 2),
                "oracle_jacobi_points": count(self.oracle_jacobi_points, 8),
            }
        )

    def sphere_level(self, n: int) -> int:
        if self.quadrature_level is not None:
            return self.quadrature_level
        return max(4, int(round(settings.quadrature_level(n) * self.level_scale)))


class RunConfig(BaseModel):
    """A run config file; fields left out fall back to CLI flags and settings."""

    symbol: Path = Field(..., description="Path to the symbol file, relative to the config file")
    test_functions: List[TestFunctionSpec] = Field(default_factory=list)
    budgets: Budgets = Field(default_factory=Budgets)
    variant: Variant = Variant.THEOREM
    seed: int = settings.SEED
    out: Optional[Path] = None
    epsilon_override: Optional[float] = Field(None, gt=0)
    dilations: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    family_parameters: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(1.0, 0.0), (0.0, 1.0), (-3.0, 0.0)],
        description="Affine-family parameters lambda as (real, imag) pairs",
    )
    tolerance: float = Field(2e-2, gt=0, description="Relative tolerance of the delta-property checks")
    homogeneity_tolerance: float = Field(1e-3, gt=0)
    radius: float = Field(0.0, ge=0, description="Radius r of the profile dumped by the leray command")
    convergence: bool = False


class LogBracketSpec(BaseModel):
    """Regularisation of the bracket <log|u|^j ; L'(u)> by a smooth cutoff of radius rho."""

    power: Literal[1, 2] = 1
    rho: Optional[float] = Field(None, gt=0, description="Cutoff radius; None means cutoff_fraction * eps")
    cutoff_fraction: float = Field(settings.CUTOFF_FRACTION, gt=0, le=0.5)
    log_panels: int = Field(settings.LOG_PANELS, ge=4)
    log_gauss_points: int = Field(settings.LOG_GAUSS_POINTS, ge=2)
    outer_gauss_points: int = Field(settings.OUTER_GAUSS_POINTS, ge=2)

    @classmethod
    def from_budgets(cls, budgets: Budgets, power: int = 1, rho: Optional[float] = None) -> "LogBracketSpec":
        return cls(
            power=power,
            rho=rho,
            cutoff_fraction=budgets.cutoff_fraction,
            log_panels=budgets.log_panels,
            log_gauss_points=budgets.log_gauss_points,
            outer_gauss_points=budgets.outer_gauss_points,
        )
