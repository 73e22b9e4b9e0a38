"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain an operation is defined on."""


class ConfigurationError(ValueError):
    """Invalid model or contour configuration (e.g. intersecting contours)."""


class NumericalError(RuntimeError):
    """A numerical consistency check failed; carries the offending residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
