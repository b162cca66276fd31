"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid input data or configuration (CLI exit code 2)."""


class DimensionMismatchError(ValidationError):
    """Feature-vector dimensions do not agree."""


class InvalidOutcomeError(ValidationError):
    """An outcome's action profile is out of range for the game."""


class DeviationSetTooLargeError(ValidationError):
    """Requested deviation set exceeds the materialization cap."""


class NotConvergedError(RuntimeError):
    """A solver failed to converge and the caller asked for an error (exit code 3)."""


class InfiniteLossError(ValueError):
    """A model assigned zero probability to an observed outcome."""
