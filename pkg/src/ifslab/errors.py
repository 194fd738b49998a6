"""Exception hierarchy shared by every ifslab module."""


class IfsLabError(Exception):
    """Base class for all library errors."""


class DomainError(IfsLabError, ValueError):
    """A point lies outside the chart a map is defined on."""


class ChartMismatch(IfsLabError, ValueError):
    pass


class SpecError(IfsLabError, ValueError):
    """Invalid bump / separator specification."""


class IntegrationError(IfsLabError, RuntimeError):
    """A flow trajectory numerically left the unit square."""


class NotConnected(IfsLabError, ValueError):
    pass


class NotEmptyInterior(IfsLabError, ValueError):
    pass


class NotAnnular(IfsLabError, ValueError):
    pass


class ColumnMiss(IfsLabError, ValueError):
    pass


class MarginViolation(IfsLabError, ValueError):
    pass


class FamilyError(IfsLabError, ValueError):
    """Family members overlap or cannot be totally ordered."""


class OrderInconsistent(IfsLabError, AssertionError):
    pass


class NotChain(IfsLabError, ValueError):
    def __init__(self, i, j, a, b):
        self.pair = (i, j)
        super().__init__(f"points {i} and {j} are incomparable: {tuple(a)} vs {tuple(b)}")


class DegenerateFit(IfsLabError, ValueError):
    pass


class BudgetExhausted(IfsLabError, RuntimeError):
    def __init__(self, best_margin, best_t):
        self.best_margin = best_margin
        self.best_t = best_t
        super().__init__(f"no separating translation found; best margin {best_margin:.6g} at t={tuple(best_t)}")


class Timeout(IfsLabError, RuntimeError):
    pass


class EscapedBand(IfsLabError, RuntimeError):
    pass


class NoneFound(IfsLabError, RuntimeError):
    pass


class NotMonotone(IfsLabError, ValueError):
    pass


class VerificationFailed(IfsLabError, RuntimeError):
    def __init__(self, message, failures=()):
        self.failures = list(failures)
        super().__init__(message)
