"""Exception types shared by every module."""


class DomainError(ValueError):
    """An input lies outside the domain of an operation.

    ``residual`` carries the offending measurement when there is one, so
    callers can report how far off the input was.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location
