from typing import Sequence


class FundsolError(Exception):
    """Base exception for numerical toolkit errors."""

    pass


# symbol
class DegenerateSymbol(FundsolError):
    """The gradient of p vanishes somewhere on the characteristic set."""

    def __init__(self, message: str, directions: Sequence[Sequence[float]] = ()):
        super().__init__(message)
        self.directions = [list(map(float, d)) for d in directions]


class DimensionMismatch(FundsolError):
    pass


class DegreeError(FundsolError):
    pass


# testfn
class NonPositiveWidth(FundsolError):
    pass


class NonPositiveScale(FundsolError):
    pass


class OrderCapExceeded(FundsolError):
    pass


# leray
class UnsupportedDimension(FundsolError):
    pass


class HypothesisViolated(FundsolError):
    pass


class MollifierTooWide(FundsolError):
    pass


class OutsideSmoothWindow(FundsolError):
    pass


# pairing
class WindowTooSmall(FundsolError):
    pass


class NonfiniteProfile(FundsolError):
    pass


# radial
class TailNotCertified(FundsolError):
    pass


class NonintegrableAssembly(FundsolError):
    pass


# solution
class CaseMismatch(FundsolError):
    pass


# oracle
class OutsideConvergenceRegion(FundsolError):
    pass


class BudgetExceeded(FundsolError):
    pass


class IllConditionedFit(FundsolError):
    pass


class PoleOrderExceeded(FundsolError):
    pass


class NoConvergenceTrend(FundsolError):
    pass
