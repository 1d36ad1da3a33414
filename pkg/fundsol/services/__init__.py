"""
Services module for fundsol.

This package holds the numerical layer: symbols and hypothesis (H), spectral
test functions, Leray profiles and their brackets, the radial functionals
behind the fundamental solution, and the independent oracles.
"""

# Import key components for easier access
from .leray import LerayFamily, LerayProfile, leray_deriv, leray_transform
from .oracle import ContinuationOracle, adjudicate, laurent_fit, proof_constants, sample_M
from .pairing import BracketFunctional, log_bracket
from .solution import SolutionFunctional
from .symbol import HomogeneousSymbol, validate_hypothesis
from .testfn import SpectralCombination, SpectralTestFunction, gaussian

__all__ = [
    "BracketFunctional",
    "ContinuationOracle",
    "HomogeneousSymbol",
    "LerayFamily",
    "LerayProfile",
    "SolutionFunctional",
    "SpectralCombination",
    "SpectralTestFunction",
    "adjudicate",
    "gaussian",
    "laurent_fit",
    "leray_deriv",
    "leray_transform",
    "log_bracket",
    "proof_constants",
    "sample_M",
    "validate_hypothesis",
]
