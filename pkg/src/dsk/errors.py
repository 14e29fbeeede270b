"""Exception hierarchy shared by all modules."""


class DskError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(DskError, ValueError):
    pass


class InfeasiblePointError(DskError, ValueError):
    """A point that must lie in the feasible set does not."""


class InvalidIntervalError(DskError, ValueError):
    pass


class TooLargeError(DskError):
    """An enumeration would exceed its configured cap."""


class ExpressionError(DskError, ValueError):
    """Syntax or semantic error in an expression string.

    ``line`` and ``column`` are 1-based positions of the offending token.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class DomainError(DskError, ArithmeticError):
    """An elementary function was evaluated outside its domain."""


class NonSmoothError(DskError):
    """Differentiation of a non-smooth function was requested."""


class WitnessError(DskError, ValueError):
    """A regularity witness violates its own defining conditions."""


class ConsistencyError(DskError, AssertionError):
    """Two independent routes to the same conclusion disagree."""


class SchemaError(DskError, ValueError):
    """An input document does not match its schema; ``path`` locates the offending value."""

    def __init__(self, message, path=()):
        self.path = tuple(path)
        where = "/".join(str(p) for p in self.path) or "<root>"
        super().__init__(f"{where}: {message}")
