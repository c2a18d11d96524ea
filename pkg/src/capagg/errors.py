"""Exception hierarchy shared across the package."""


class CapError(Exception):
    """Base class for every error raised by capagg."""


class EventSyntaxError(CapError, ValueError):
    """Malformed event expression."""

    def __init__(self, message: str, text: str = "", position: int = 0):
        self.text = text
        self.position = position
        if text:
            message = f"{message} at position {position}: {text!r}"
        super().__init__(message)


class MissingVariableError(CapError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"truth assignment has no value for variable {name!r}")

    def __str__(self) -> str:
        return self.args[0]


class SupportTooLargeError(CapError, ValueError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"joint support has {size} variables, enumeration cap is {cap}")


class DimensionMismatchError(CapError, ValueError):
    pass


class SolverError(CapError, RuntimeError):
    """A numerical routine failed to reach its stopping tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class CertificateError(SolverError):
    """A projection failed its variational-inequality check."""


class UndefinedSlopeError(CapError, ValueError):
    pass


class DataError(CapError, ValueError):
    """Bad forecast data: out-of-range probability, missing truth, unreadable row."""
