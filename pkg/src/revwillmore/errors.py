"""Exception types raised across the toolkit."""


class RevWillmoreError(Exception):
    """Base class for all toolkit errors."""


class DegenerateImmersion(RevWillmoreError, ValueError):
    pass


class SingularPoint(RevWillmoreError):
    """A point lies on (or numerically on) a boundary circle."""


class VerticalTangent(RevWillmoreError):
    pass


class BoundaryMismatch(RevWillmoreError):
    pass


class StepFailure(RevWillmoreError):
    pass


class BudgetExhausted(RevWillmoreError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(RevWillmoreError):
    pass


class LiYauViolation(RevWillmoreError):
    """A density >= 2 was measured although the energy gate held."""
