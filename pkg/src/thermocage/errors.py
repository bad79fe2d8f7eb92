"""Exception hierarchy shared by all thermocage modules."""


class ThermocageError(Exception):
    """Base class for every error raised by the package."""


class DomainError(ThermocageError, ValueError):
    """An argument lies outside the domain of an operation."""


class ModelError(ThermocageError):
    """The thermal model itself is ill-posed (e.g. no path to the sink)."""


class NumericalError(ThermocageError, ArithmeticError):
    """A linear solve failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class OracleError(ThermocageError):
    """The explicit reference integrator would be unstable."""


class MeasurementError(ThermocageError):
    """A probe simulation produced no measurable response."""


class PlanningError(ThermocageError):
    """An attack plan cannot be built for the requested victim."""


class ValidationError(ThermocageError, ValueError):
    """A scenario document violates the schema; ``path`` names the field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
