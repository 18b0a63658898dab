"""Exception types shared across the package."""


class OutOfRangeError(ValueError):
    """An argument lies outside the certified domain of an evaluation."""


class NoConvergenceError(RuntimeError):
    """An iterative solve exhausted its budget."""


class CFLViolation(ValueError):
    """A requested explicit time step exceeds the stability limit."""


class InvariantBreach(RuntimeError):
    """A discrete state lost a structural property (monotonicity, graphicality)."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class InsufficientData(ValueError):
    """A trace is too short for the requested fit or check."""


class ConfigError(ValueError):
    """Bad configuration value; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class NoOverlap(InsufficientData):
    """Two aligned runs share no common time window."""
