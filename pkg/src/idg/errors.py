class IdgError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidInput(IdgError):
    """An argument failed validation (bad index, terminal state, malformed doc)."""


class GenerationFailure(IdgError):
    """Random instance generation exhausted its attempt budget."""


class GuardExceeded(IdgError):
    """An exhaustive-check guard (state count / horizon) was exceeded."""
