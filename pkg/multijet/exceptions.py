"""
Exception classes for multijet.

This module defines the error hierarchy used throughout the package. Every
error carries a machine-readable code and an exit code so that the CLI can
serialise failures into reports and terminate with the documented status.
"""

from typing import Any

EXIT_SUCCESS = 0
EXIT_VALIDATION_FAILURE = 2
EXIT_INPUT_ERROR = 3
EXIT_NUMERICAL_DEGENERACY = 4


class MultijetError(Exception):
    """Base exception class for multijet errors."""

    exit_code: int = EXIT_INPUT_ERROR

    def __init__(
        self,
        message: str,
        code: str = "MULTIJET_ERROR",
        details: dict[str, Any] | None = None,
    ):
        """
        Initialize multijet error.

        Args:
            message: Error message
            code: Error code for programmatic handling
            details: Additional error details
        """
        super().__init__(message)
        self.message = message
        self.code = code
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        """Serialise the error for JSON reports."""
        return {"code": self.code, "message": self.message, "details": self.details}


class ValidationError(MultijetError):
    """Exception for invalid inputs."""

    def __init__(self, message: str, field: str | None = None, **kwargs):
        """
        Initialize validation error.

        Args:
            message: Error message
            field: Field that failed validation
            **kwargs: Additional details
        """
        details = {"field": field, **kwargs}
        code = kwargs.pop("code", None) or "VALIDATION_ERROR"
        details.pop("code", None)
        super().__init__(message, code=code, details=details)
        self.field = field


class ConfigurationError(MultijetError):
    """Exception for configuration errors."""

    def __init__(self, message: str, setting: str | None = None, **kwargs):
        """
        Initialize configuration error.

        Args:
            message: Error message
            setting: Configuration setting that caused the error
            **kwargs: Additional details
        """
        details = {"setting": setting, **kwargs}
        super().__init__(message, code="CONFIGURATION_ERROR", details=details)
        self.setting = setting


class DimensionMismatchError(ValidationError):
    """Raised when arrays or polynomials live in different ambient dimensions."""

    def __init__(self, expected: int, got: int, field: str | None = None):
        super().__init__(
            f"Dimension mismatch: expected {expected}, got {got}",
            field=field,
            code="DIMENSION_MISMATCH",
            expected=expected,
            got=got,
        )
        self.expected = expected
        self.got = got


class SmoothnessError(ValidationError):
    """Raised when a function oracle cannot supply the derivatives required."""

    def __init__(self, required: int, available: int, name: str = "f"):
        super().__init__(
            f"Function {name} provides derivatives up to order {available}, "
            f"order {required} is required",
            field="smoothness",
            code="INSUFFICIENT_SMOOTHNESS",
            required=required,
            available=available,
        )
        self.required = required
        self.available = available


class MissingJetDataError(ValidationError):
    """Raised when jet data lacks an entry needed by a formula."""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, field="jet", code="MISSING_JET_DATA", **kwargs)


class UnknownFunctionError(ValidationError):
    """Raised when a function or kernel id is not in the built-in registry."""

    def __init__(self, name: str, known: list[str]):
        super().__init__(
            f"Unknown id '{name}'. Known ids: {', '.join(sorted(known))}",
            field="name",
            code="UNKNOWN_FUNCTION",
            known=sorted(known),
        )
        self.name = name


class CapExceededError(ValidationError):
    """Raised when a request exceeds a desk-scale cap without an override."""

    def __init__(self, setting: str, requested: int, cap: int):
        super().__init__(
            f"{setting}={requested} exceeds the desk-scale cap {cap} "
            "(pass --override-caps to run anyway)",
            field=setting,
            code="CAP_EXCEEDED",
            requested=requested,
            cap=cap,
        )


class NumericalDegeneracyError(MultijetError):
    """Base class for errors caused by (near) degenerate linear algebra."""

    exit_code = EXIT_NUMERICAL_DEGENERACY


class RankDeficientError(NumericalDegeneracyError):
    """Raised when an evaluation matrix loses rank near the large diagonal."""

    def __init__(self, observed_rank: int, expected_rank: int, **kwargs):
        """
        Initialize rank deficiency error.

        Args:
            observed_rank: Numerical rank that was measured
            expected_rank: Rank required for the kernel to have the right codimension
            **kwargs: Additional details
        """
        details = {
            "observed_rank": observed_rank,
            "expected_rank": expected_rank,
            **kwargs,
        }
        super().__init__(
            f"Numerical rank {observed_rank} (need {expected_rank}): configuration "
            "is too close to the large diagonal",
            code="RANK_DEFICIENT",
            details=details,
        )
        self.observed_rank = observed_rank
        self.expected_rank = expected_rank


class DegenerateConditioningError(NumericalDegeneracyError):
    """Raised when the value block of a Gaussian vector is not invertible."""

    def __init__(self, min_eigenvalue: float, **kwargs):
        details = {"min_eigenvalue": min_eigenvalue, **kwargs}
        super().__init__(
            f"Cannot condition on a singular value block "
            f"(min eigenvalue {min_eigenvalue:.3e})",
            code="DEGENERATE_CONDITIONING",
            details=details,
        )
        self.min_eigenvalue = min_eigenvalue


class IndefiniteCovarianceError(NumericalDegeneracyError):
    """Raised when a covariance matrix stays indefinite after jitter."""

    def __init__(self, min_eigenvalue: float, **kwargs):
        details = {"min_eigenvalue": min_eigenvalue, **kwargs}
        super().__init__(
            f"Covariance is indefinite after jitter "
            f"(min eigenvalue {min_eigenvalue:.3e})",
            code="INDEFINITE_COVARIANCE",
            details=details,
        )
        self.min_eigenvalue = min_eigenvalue


class AcceptanceFailure(MultijetError):
    """Raised by the validation suite when at least one check fails."""

    exit_code = EXIT_VALIDATION_FAILURE

    def __init__(self, failed: list[str]):
        super().__init__(
            f"{len(failed)} acceptance check(s) failed: {', '.join(failed)}",
            code="ACCEPTANCE_FAILURE",
            details={"failed": failed},
        )
        self.failed = failed


class MultijetWarning(UserWarning):
    """Base class for warnings that are serialised into reports."""

    code = "WARNING"


class ResolutionWarning(MultijetWarning):
    """A grid or quadrature resolution was too coarse for the requested accuracy."""

    code = "RESOLUTION"


class IntegrabilityWarning(MultijetWarning):
    """A density looks non-integrable near the diagonal."""

    code = "INTEGRABILITY"
