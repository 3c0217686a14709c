"""Error hierarchy for singular BIC computations."""

from typing import Any, Optional


class SbicError(Exception):
    """Base exception for all singular BIC errors."""

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details or {}


class SchemaError(SbicError):
    """Input document does not match the expected schema."""

    def __init__(
        self,
        message: str,
        details: Optional[dict[str, Any]] = None,
        field: Optional[str] = None,
    ) -> None:
        super().__init__(message, details)
        self.field = field


class ValidationError(SbicError):
    """Input is well-formed but violates a model or coefficient constraint."""

    def __init__(
        self,
        message: str,
        details: Optional[dict[str, Any]] = None,
        field: Optional[str] = None,
    ) -> None:
        super().__init__(message, details)
        self.field = field


class CycleError(ValidationError):
    """Cover relations imply i <= j <= i for distinct models."""

    def __init__(self, message: str, cycle: tuple[str, str]) -> None:
        super().__init__(message, details={"cycle": list(cycle)})
        self.cycle = cycle


class UnknownIdError(ValidationError):
    """A model identifier is not a member of the poset."""

    def __init__(self, model_id: object) -> None:
        super().__init__(f"Unknown model id: {model_id!r}", details={"id": model_id})
        self.model_id = model_id


class RankRangeError(ValidationError):
    """Rank arguments outside 0 <= j <= i <= min(N, M)."""


class RangeError(ValidationError):
    """Arguments outside the range covered by a coefficient table or bound."""


class SampleSizeError(ValidationError):
    """Sample size too small for the log(log n) correction."""


class DimensionError(ValidationError):
    """Inconsistent matrix or vector dimensions."""


class EmptyError(ValidationError):
    """An aggregate was requested over no observations."""


class NumericalError(SbicError):
    """A numerical routine failed or produced an unusable value."""


class NonFiniteError(NumericalError):
    """NaN or infinite value encountered."""


class NonConvergenceError(NumericalError):
    """Iteration cap reached before the convergence criterion was met."""

    def __init__(
        self,
        message: str,
        iterations: int,
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        super().__init__(message, details)
        self.iterations = iterations


class SingularDesignError(NumericalError):
    """Covariate Gram matrix is numerically singular."""

    def __init__(self, message: str, condition: float) -> None:
        super().__init__(message, details={"condition": condition})
        self.condition = condition


class DegenerateComponentError(NumericalError):
    """A mixture component lost (almost) all of its responsibility."""

    def __init__(self, message: str, component: int) -> None:
        super().__init__(message, details={"component": component})
        self.component = component


class NotPositiveDefiniteError(NumericalError):
    """A covariance matrix that must be positive definite is not."""


class DegenerateError(NumericalError):
    """A fitted covariance became numerically singular."""


class OutputError(SbicError):
    """Results could not be written."""

    def __init__(self, message: str, path: str) -> None:
        super().__init__(message, details={"path": path})
        self.path = path
