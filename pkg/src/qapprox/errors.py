"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the convergence or evaluation domain."""


class TruncationCapError(ArithmeticError):
    """A series or product hit its hard term cap before meeting tolerance."""


class EvaluationError(ArithmeticError):
    """A target function returned a non-finite value."""


class ConfigError(ValueError):
    """A run configuration could not be parsed or validated."""
