"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition or invariant."""


class NumericError(RuntimeError):
    """Raised when a numerical routine fails to certify its own result."""
