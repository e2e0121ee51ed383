"""Exception hierarchy shared by the library and the CLI."""


class GraphValidationError(ValueError):
    """Input graph, voltage assignment or group table is malformed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(RuntimeError):
    """A nonlinear solve did not reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class InvariantError(AssertionError):
    """A mathematical identity that must hold was violated numerically."""


class CapExceededError(ValueError):
    """An enumeration or construction would exceed its configured size cap."""
