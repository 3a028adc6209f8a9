"""Exception types raised across the package.

The CLI maps these onto exit codes: input problems -> 1, numerical
corruption -> 2, size caps -> 3.
"""


class PoissonApproxError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidInput(PoissonApproxError, ValueError):
    pass


class NonLatticePoint(InvalidInput):
    pass


class IncompatibleLattice(InvalidInput):
    pass


class InvalidTolerance(InvalidInput):
    pass


class NotClassG(InvalidInput):
    pass


class MissingParam(InvalidInput):
    pass


class SupportViolation(InvalidInput):
    pass


class ParamBelowLambda(InvalidInput):
    pass


class EmptySample(InvalidInput):
    pass


class OverlappingRegions(InvalidInput):
    pass


class NumericalCorruption(PoissonApproxError, ArithmeticError):
    exit_code = 2


class SupportOverflow(PoissonApproxError):
    exit_code = 3


class TooLarge(PoissonApproxError):
    exit_code = 3
