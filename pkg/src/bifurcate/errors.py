"""Exception types shared across the package."""


class BifurcateError(Exception):
    """Base class for every error this package raises deliberately."""


class JetError(BifurcateError):
    """Degree mismatch or an operation a truncated series cannot support."""


class ParseError(BifurcateError):
    """Expression error.  ``offset`` is a 1-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.message = message
        self.offset = offset


class DomainError(BifurcateError):
    """Evaluation left the domain of an elementary function."""


class ConfigError(BifurcateError):
    """Missing, malformed, or inconsistent map configuration."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ClassificationMismatch(BifurcateError):
    """A skeleton operation was applied to a jet of the wrong kind."""


class NumericError(BifurcateError):
    """An iteration failed to converge or produced inconsistent output."""


class ConjugacyError(BifurcateError):
    """Conjugacy construction preconditions do not hold."""


class IterationCapError(ConjugacyError):
    """The point is too close to a fixed point for the iteration budget."""
