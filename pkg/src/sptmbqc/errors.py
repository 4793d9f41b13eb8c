"""Exception hierarchy.

Errors that indicate a numerical failure (as opposed to bad input) derive
from :class:`NumericalFailure`; the CLI maps them to exit code 3.
"""


class SPTError(Exception):
    """Base class for all package errors."""


class ValidationError(SPTError, ValueError):
    """Input does not satisfy a precondition."""


class NumericalFailure(SPTError):
    """A numerical routine could not produce a trustworthy answer."""


class NonDiagonalizable(NumericalFailure):
    pass


class ToleranceAmbiguity(NumericalFailure):
    pass


class NotPrimitive(NumericalFailure):
    pass


class InconsistentVerdict(NumericalFailure):
    pass


class RetriesExhausted(NumericalFailure):
    pass


class NotMNC(ValidationError):
    pass


class NotSquareForm(ValidationError):
    pass


class NoSolution(ValidationError):
    pass


class NotGenerating(ValidationError):
    pass


class NotADivisor(ValidationError):
    pass


class NotNormalizable(ValidationError):
    pass


class DimensionTooLarge(ValidationError):
    pass


class DeadDirection(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class SchemaError(ValidationError):
    pass
