"""Exception types shared by all modules."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class DegenerateInputError(ValidationError):
    """Input is degenerate (e.g. the zero matrix where a polar factor is needed)."""


class UnsupportedShapeError(ValidationError):
    """Operation not defined for this circuit shape (e.g. pooling present)."""


class CapacityError(ValidationError):
    """Problem size exceeds what the dense routines accept."""


class ParseError(ValueError):
    """Malformed serialized document. ``location`` is a JSON-pointer-like path."""

    def __init__(self, message, location=""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class ConvergenceError(RuntimeError):
    """Iterative method stopped without meeting its tolerance."""

    def __init__(self, message, best_residual=float("nan"), trace=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.trace = trace


class InfeasibleError(ValueError):
    """Requested target cannot be reached (e.g. bound floor above target)."""

    def __init__(self, message, floor=float("nan")):
        super().__init__(message)
        self.floor = floor
