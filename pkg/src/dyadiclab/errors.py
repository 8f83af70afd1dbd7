"""Exception types raised across the package."""


class DyadicError(ValueError):
    """Base class for invalid dyadic-grid requests."""


class LevelOverflowError(DyadicError):
    pass


class NoParentError(DyadicError):
    pass


class NoCoverError(DyadicError):
    pass


class ZeroMassError(DyadicError):
    pass


class ExponentError(ValueError):
    pass


class NotSparseError(ValueError):
    """Raised when a cube family fails the sparseness test.

    Carries the first violating cube and the largest eta the canonical
    witness achieves.
    """

    def __init__(self, message, cube=None, achievable_eta=None, flow_feasible=None):
        super().__init__(message)
        self.cube = cube
        self.achievable_eta = achievable_eta
        self.flow_feasible = flow_feasible


class DegenerateDecompositionError(ValueError):
    """The root average already exceeds the stopping height."""


class GeneratorError(ValueError):
    pass


class BracketViolation(AssertionError):
    """An inequality that holds unconditionally was observed to fail."""


class ScopeCostError(ValueError):
    pass


class ConfigError(ValueError):
    """A configuration value is missing, malformed or violates a precondition.

    ``key`` names the offending entry.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
