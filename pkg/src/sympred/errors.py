"""Exception types raised by :mod:`sympred`."""


class SympredError(Exception):
    """Base class for all library errors."""


class InvalidInputError(SympredError, ValueError):
    pass


class NumericError(SympredError, ArithmeticError):
    pass


class UnsupportedError(SympredError):
    """The requested operation has no meaning for this generator case."""


class UnsupportedClassificationError(UnsupportedError):
    pass


class SamplingFailedError(SympredError):
    pass


class NotTangentError(SympredError, ValueError):
    pass


class NotHorizontalError(SympredError, ValueError):
    pass


class NotALiftError(SympredError, ValueError):
    pass


class BadBasisError(SympredError, ValueError):
    pass


class FitImpossibleError(SympredError):
    pass


class InternalConsistencyError(SympredError):
    pass


class ChartBreakdownError(SympredError):
    pass
