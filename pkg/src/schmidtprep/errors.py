"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class ShapeError(ValidationError):
    """Tensor extents do not line up."""


class NumericalError(RuntimeError):
    """An underlying factorisation or solver failed to converge."""


class ResourceError(RuntimeError):
    """A problem is too large for the requested dense or capped computation."""
