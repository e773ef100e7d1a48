"""Exception types shared across the package."""


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature fails to reach the requested tolerance."""


class IntegrationError(RuntimeError):
    """Raised when a trajectory violates its trace/positivity diagnostics.

    Usually means the step size is too large for the requested rates.
    """


class FitError(RuntimeError):
    """Raised when a nonlinear fit cannot produce even a best-effort result."""
