"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An input violates a documented precondition."""


class NumericFailure(RuntimeError):
    """A numerical procedure did not converge; ``diagnostics`` holds details."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BlowupReached(RuntimeError):
    """Evaluation requested at or past a known blowup time."""


class StepSizeFailure(RuntimeError):
    """A time step violates the CFL restriction."""


class ResourceLimit(RuntimeError):
    """A computation would exceed its configured resolution or time budget."""
