"""Exception hierarchy shared by every filtra module."""


class FiltraError(Exception):
    """Base class for all errors raised by filtra."""


class DivisionByZero(FiltraError, ZeroDivisionError):
    pass


class UnknownCoordinate(FiltraError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DenominatorVanishesIdentically(FiltraError, ZeroDivisionError):
    pass


class FrameMismatch(FiltraError, ValueError):
    pass


class MissingRule(FiltraError, ValueError):
    pass


class MissingTransition(FiltraError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SingularLinearPart(FiltraError, ValueError):
    pass


class SingularJacobian(FiltraError, ValueError):
    pass


class NotOverDiffeomorphism(FiltraError, ValueError):
    pass


class DanglingReference(FiltraError, ValueError):
    pass


class InternalInvariantBroken(FiltraError, AssertionError):
    """A construction produced an output that fails validation.

    This signals a defect in filtra itself, never bad user input.
    """


class DegreeBoundExceeded(FiltraError, ValueError):
    pass


class NotConnected(FiltraError, ValueError):
    pass


class NotNested(FiltraError, ValueError):
    pass


class DSLError(FiltraError):
    """A diagnostic tied to a position in a source document."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self.__str__())

    def __str__(self):
        if self.line is None:
            return self.message
        return f"{self.line}:{self.column}: {self.message}"


class DSLSyntaxError(DSLError):
    def __init__(self, message, line=None, column=None, expected=()):
        self.expected = tuple(expected)
        if self.expected:
            message = f"{message} (expected {', '.join(self.expected)})"
        super().__init__(message, line, column)


class UndeclaredSymbol(DSLError):
    pass


class FiberDenominator(DSLError):
    pass


class NotMultiplicative(FiltraError, ValueError):
    """Products of lower-level generators escape the presented level."""
