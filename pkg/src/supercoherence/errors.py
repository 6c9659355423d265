"""Exception hierarchy.

Validation problems derive from ``ValidationError`` (a ``ValueError``);
numerical breakdowns derive from ``NumericalError``.  The CLI maps the two
families to exit codes 1 and 2.
"""


class SupercoherenceError(Exception):
    pass


class ValidationError(SupercoherenceError, ValueError):
    pass


class NumericalError(SupercoherenceError, ArithmeticError):
    pass


class EmptyGraph(ValidationError):
    """A random graph came out with no edges, so it cannot be normalized."""


class ParseError(ValidationError):
    def __init__(self, message, text="", position=0):
        self.text = text
        self.position = position
        if text:
            message = f"{message} at position {position}: {text!r}"
        super().__init__(message)


class InsufficientData(ValidationError):
    pass


class DimensionCap(ValidationError):
    pass


class NoIsolatedState(ValidationError):
    pass


class NumericalBlowup(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class NoTransition(NumericalError):
    pass


class DiagonalizationFailure(NumericalError):
    pass


class PropagationError(NumericalError):
    pass
