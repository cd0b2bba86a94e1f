"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input violates a documented precondition (bad shape, range, or value)."""


class SamplingError(RuntimeError):
    """A rejection sampler exhausted its attempt budget."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance within its budget."""
