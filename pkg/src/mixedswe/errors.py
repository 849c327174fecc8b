"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A builder or operation was called with an out-of-range argument."""


class MeshParseError(ValueError):
    """A mesh file could not be parsed."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class InvariantViolation(RuntimeError):
    """A structural invariant (mesh, element or operator) does not hold."""


class SolverFailure(RuntimeError):
    """A linear or eigen solve failed or returned an unacceptable residual."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)
