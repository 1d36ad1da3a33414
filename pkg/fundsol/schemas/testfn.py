from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, Field

from .symbol import MonomialSpec


class TestFunctionType(str, Enum):
    GAUSSIAN = "gaussian"


class TestFunctionSpec(BaseModel):
    """Config block: {"type": "gaussian", "center": [...], "sigma": float, "poly": [...]}."""

    __test__ = False  # not a pytest class

    type: Literal[TestFunctionType.GAUSSIAN] = TestFunctionType.GAUSSIAN
    center: List[float] = Field(..., description="Center a of the Gaussian")
    sigma: float = Field(1.0, gt=0, description="Width sigma")
    poly: Optional[List[MonomialSpec]] = Field(
        None, description="Optional x-space polynomial prefactor q"
    )
    label: Optional[str] = None
