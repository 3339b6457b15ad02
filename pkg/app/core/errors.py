from typing import Any, Optional


class ReachError(Exception):
    """Base class for every failure the toolkit reports."""
    exit_code = 1


class ValidationError(ReachError):
    exit_code = 2


class InvalidInput(ValidationError):
    pass


class DependentInputs(ValidationError):
    pass


class NotHyperbolic(ValidationError):
    pass


class InvariantViolation(ValidationError):
    pass


class NotControllable(ValidationError):
    pass


class PreconditionViolated(ValidationError):
    def __init__(self, predicate: str, detail: str = ""):
        self.predicate = predicate
        message = f"precondition violated: {predicate}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class NumericalFailure(ReachError):
    exit_code = 3


class NumericalOverflow(NumericalFailure):
    pass


class TruncationInsufficient(NumericalFailure):
    def __init__(self, deficit: float, dimension: int):
        self.deficit = deficit
        self.dimension = dimension
        super().__init__(f"truncation N={dimension} leaves norm deficit {deficit:.3e}")


class NotConverged(NumericalFailure):
    """Carries the best plan found so the caller can still inspect it."""

    def __init__(self, plan: Optional[Any] = None, message: str = "steering did not converge"):
        self.plan = plan
        super().__init__(message)
