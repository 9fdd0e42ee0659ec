class SnakeWalkError(Exception):
    """Base class for library errors."""


class PreconditionError(SnakeWalkError, ValueError):
    pass


class CapacityError(SnakeWalkError):
    pass


class RootCountError(SnakeWalkError):
    pass


class NumericalInstabilityError(SnakeWalkError):
    pass


class TruncationError(SnakeWalkError):
    pass


class ResolutionError(SnakeWalkError):
    pass


class ConsistencyError(SnakeWalkError):
    pass


class NonHermitianError(SnakeWalkError, ValueError):
    pass


class ConvergenceError(SnakeWalkError):
    pass


class SignConventionError(SnakeWalkError):
    pass


class OracleValidationError(SnakeWalkError):
    pass
