"""Exception types shared across the package."""


class CrystalSpeedError(Exception):
    """Base class for all package errors."""


class ConfigError(CrystalSpeedError):
    """A run configuration failed validation.

    Carries a list of field-level messages so callers can report every
    problem at once instead of one per invocation.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class SimulationAbort(CrystalSpeedError):
    """A time integration was stopped by a safety check.

    Raised when the support of the solution reaches the boundary ring
    (domain too small for the requested horizon) or when a field stops
    being finite.
    """
