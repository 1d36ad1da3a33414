from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from ..config import settings


class MonomialSpec(BaseModel):
    alpha: List[int] = Field(..., description="Exponent multi-index")
    coeff: float = Field(..., description="Real coefficient")

    @field_validator("alpha")
    @classmethod
    def non_negative(cls, v: List[int]) -> List[int]:
        if any(a < 0 for a in v):
            raise ValueError(f"exponents must be non-negative, got {v}")
        return v


class SymbolSpec(BaseModel):
    """On-disk symbol file: {"n": int, "k": int, "monomials": [{"alpha": [...], "coeff": float}]}."""

    n: int = Field(..., ge=2, description="Dimension of the frequency space")
    k: int = Field(..., ge=1, description="Homogeneity degree")
    monomials: List[MonomialSpec] = Field(..., min_length=1)
    name: Optional[str] = Field(None, description="Label used in reports")

    @model_validator(mode="after")
    def homogeneous(self) -> "SymbolSpec":
        for m in self.monomials:
            if len(m.alpha) != self.n:
                raise ValueError(f"monomial {m.alpha} has length {len(m.alpha)}, expected n={self.n}")
            if sum(m.alpha) != self.k:
                raise ValueError(f"monomial {m.alpha} has degree {sum(m.alpha)}, expected k={self.k}")
        if all(m.coeff == 0 for m in self.monomials):
            raise ValueError("at least one coefficient must be nonzero")
        return self


class ValidationTolerances(BaseModel):
    zero_relative: float = Field(settings.ZERO_TOLERANCE, gt=0)
    gradient_relative: float = Field(settings.GRADIENT_TOLERANCE, gt=0)
    window_fraction: float = Field(settings.WINDOW_FRACTION, gt=0, le=1)
    epsilon_override: Optional[float] = Field(None, gt=0, description="User-supplied window radius")


class SymbolValidation(BaseModel):
    """Result of checking hypothesis (H) on the unit sphere."""

    passes_h: bool
    min_tangential_gradient_norm: float = Field(..., ge=0)
    characteristic_samples: List[List[float]] = Field(default_factory=list)
    epsilon: float = Field(..., gt=0, description="Radius of the smooth window K_eps")
    epsilon_overridden: bool = False
    empty_characteristic_set: bool = False
    sup_norm: float = Field(..., gt=0)
    zero_tolerance: float
    gradient_tolerance: float
    offending_directions: List[List[float]] = Field(default_factory=list)
    support: List[float] = Field(..., description="[min p, max p] on the sphere")
