"""Exception types shared across the package."""


class QlidarError(Exception):
    """Base class for all package errors."""


class DomainError(QlidarError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(QlidarError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""


class ConfigError(QlidarError, ValueError):
    """A scenario configuration could not be parsed or validated."""

    def __init__(self, message, *, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
