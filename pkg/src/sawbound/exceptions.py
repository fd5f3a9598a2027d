class SawboundError(Exception):
    """Base class for domain errors raised by this package."""


class LatticeError(SawboundError, ValueError):
    pass


class BudgetExceededError(SawboundError):
    """An enumeration or search exceeded its configured work cap."""


class InexactDivisionError(SawboundError, ArithmeticError):
    pass


class MatrixFileError(SawboundError):
    """Malformed, truncated, wrong-version or checksum-failing matrix file."""


class NotPrimitiveError(SawboundError):
    pass


class ConvergenceError(SawboundError):
    pass


class HypothesisError(SawboundError, ValueError):
    """Input violates the hypothesis of the statement being certified."""
