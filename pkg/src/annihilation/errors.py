"""Exception hierarchy shared by the solver, the analysis tools and the CLI."""


class AnnihilationError(Exception):
    """Base class for all package errors."""


class ConfigError(AnnihilationError, ValueError):
    """Invalid parameters or run configuration."""


class GridError(AnnihilationError, ValueError):
    """A time or step count does not land on the uniform grid."""


class SchemeBreakdownError(AnnihilationError, ArithmeticError):
    """The per-step quadratic has no admissible (real, positive) root."""

    def __init__(self, message, k=None, coefficients=None):
        if k is not None:
            message = f"step k={k}: {message}"
        if coefficients is not None:
            A, B, C = coefficients
            message = f"{message} (A={A!r}, B={B!r}, C={C!r})"
        super().__init__(message)
        self.k = k
        self.coefficients = coefficients


class FitError(AnnihilationError, RuntimeError):
    """Power-law fit failed to converge or is singular on its window."""
