"""Exception hierarchy."""


class EVFlexError(Exception):
    pass


class DomainError(EVFlexError, ValueError):
    pass


class DimensionMismatch(EVFlexError, ValueError):
    pass


class InvalidRequest(EVFlexError, ValueError):
    pass


class NegativePeriod(InvalidRequest):
    pass


class WindowOutOfRange(InvalidRequest):
    pass


class InfeasibleRequest(InvalidRequest):
    pass


class ZeroMeanInput(EVFlexError, ValueError):
    pass


# the wholesale variant of the same failure
ZeroMeanWholesale = ZeroMeanInput


class NonPositiveInput(EVFlexError, ValueError):
    pass


class MarketDominatedByGrid(EVFlexError):
    """Community import price exceeds the grid import price at every step.

    Carries the derived tariffs so callers can treat it as a warning.
    """

    def __init__(self, message, tariffs=None):
        super().__init__(message)
        self.tariffs = tariffs


class BadBigM(EVFlexError, ValueError):
    pass


class InconsistentSolution(EVFlexError):
    pass


class NumericalBreakdown(EVFlexError):
    pass


class LimitReached(EVFlexError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class Infeasible(EVFlexError):
    def __init__(self, message, tag=None):
        super().__init__(message)
        self.tag = tag


class GenerationExhausted(EVFlexError):
    pass


class BadWindow(EVFlexError, ValueError):
    pass


class TooLarge(EVFlexError, ValueError):
    pass


class ModeMissing(EVFlexError, KeyError):
    pass
