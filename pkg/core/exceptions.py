"""
Custom Exceptions for dpmixsgd
Provides structured error handling with user-friendly messages
"""

from typing import Dict, Optional, Any
from enum import Enum


class ErrorCategory(Enum):
    """Error categories for better classification"""
    CONFIGURATION = "configuration"
    VALIDATION = "validation"
    TOPOLOGY = "topology"
    DATA = "data"
    OPTIMIZATION = "optimization"
    PRIVACY = "privacy"
    REPORTING = "reporting"
    SYSTEM = "system"


class ErrorSeverity(Enum):
    """Error severity levels"""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class DPMixError(Exception):
    """
    Base exception for all dpmixsgd errors

    Attributes:
        message: Error message
        details: Additional error details
        category: Error category
        severity: Error severity
        suggestion: Suggested fix
        original_error: Original exception (if wrapped)
    """

    def __init__(
        self,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        category: ErrorCategory = ErrorCategory.SYSTEM,
        severity: ErrorSeverity = ErrorSeverity.MEDIUM,
        suggestion: Optional[str] = None,
        original_error: Optional[Exception] = None
    ):
        self.message = message
        self.details = details or {}
        self.category = category
        self.severity = severity
        self.suggestion = suggestion
        self.original_error = original_error

        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert error to dictionary

        Returns:
            Dictionary representation of error
        """
        return {
            'error_type': self.__class__.__name__,
            'message': self.message,
            'category': self.category.value,
            'severity': self.severity.value,
            'details': self.details,
            'suggestion': self.suggestion,
            'original_error': str(self.original_error) if self.original_error else None
        }

    def __str__(self) -> str:
        parts = [self.message]

        if self.details:
            parts.append(f"Details: {self.details}")

        if self.suggestion:
            parts.append(f"Suggestion: {self.suggestion}")

        return " | ".join(parts)


class ConfigurationError(DPMixError):
    """
    Configuration-related errors

    Raised when:
    - Invalid configuration document
    - Unknown or missing keys
    - Values outside their documented ranges
    """

    def __init__(
        self,
        message: str,
        key_path: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
        suggestion: Optional[str] = None,
        original_error: Optional[Exception] = None
    ):
        if key_path:
            details = details or {}
            details['key'] = key_path

        super().__init__(
            message=message,
            details=details,
            category=ErrorCategory.CONFIGURATION,
            severity=ErrorSeverity.HIGH,
            suggestion=suggestion,
            original_error=original_error
        )


class ValidationError(DPMixError):
    """
    Precondition violations on numerical inputs

    Raised when:
    - A vector leaves its feasible set (e.g. y outside the simplex)
    - A minibatch is empty
    - A parameter is outside its admissible range
    """

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        value: Any = None,
        details: Optional[Dict[str, Any]] = None,
        suggestion: Optional[str] = None,
        original_error: Optional[Exception] = None
    ):
        details = details or {}
        if field:
            details['field'] = field
        if value is not None:
            details['value'] = value

        super().__init__(
            message=message,
            details=details,
            category=ErrorCategory.VALIDATION,
            severity=ErrorSeverity.MEDIUM,
            suggestion=suggestion,
            original_error=original_error
        )


class DimensionError(ValidationError):
    """Shape mismatch between arrays, problems and topologies"""

    def __init__(
        self,
        message: str,
        expected: Any = None,
        actual: Any = None,
        details: Optional[Dict[str, Any]] = None,
        suggestion: Optional[str] = None
    ):
        details = details or {}
        if expected is not None:
            details['expected'] = expected
        if actual is not None:
            details['actual'] = actual

        super().__init__(message, details=details, suggestion=suggestion)


class TopologyError(DPMixError):
    """
    Communication graph errors

    Raised when:
    - A mixing matrix is requested for a disconnected graph
    - An edge list is malformed
    """

    def __init__(
        self,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        suggestion: Optional[str] = None,
        original_error: Optional[Exception] = None
    ):
        super().__init__(
            message=message,
            details=details,
            category=ErrorCategory.TOPOLOGY,
            severity=ErrorSeverity.HIGH,
            suggestion=suggestion,
            original_error=original_error
        )


class DataFormatError(DPMixError):
    """
    Dataset ingestion errors

    Raised when:
    - A LIBSVM line cannot be parsed
    - Labels are not binary
    - Sharding is impossible (more agents than samples)
    """

    def __init__(
        self,
        message: str,
        line_number: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None,
        suggestion: Optional[str] = None,
        original_error: Optional[Exception] = None
    ):
        if line_number is not None:
            details = details or {}
            details['line'] = line_number
            message = f"line {line_number}: {message}"

        super().__init__(
            message=message,
            details=details,
            category=ErrorCategory.DATA,
            severity=ErrorSeverity.HIGH,
            suggestion=suggestion,
            original_error=original_error
        )


class DivergenceError(DPMixError):
    """
    Numerical blow-up during a run

    Raised when a NaN or Inf appears in an agent iterate or estimator.
    """

    def __init__(
        self,
        message: str,
        iteration: Optional[int] = None,
        agent: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None,
        suggestion: Optional[str] = None,
        original_error: Optional[Exception] = None
    ):
        details = details or {}
        if iteration is not None:
            details['iteration'] = iteration
        if agent is not None:
            details['agent'] = agent

        super().__init__(
            message=message,
            details=details,
            category=ErrorCategory.OPTIMIZATION,
            severity=ErrorSeverity.HIGH,
            suggestion=suggestion or "Reduce eta_x / eta_y or enable gradient clipping",
            original_error=original_error
        )


class PrivacyError(DPMixError):
    """
    Privacy accounting errors

    Raised when:
    - gamma is not in (0, 1)
    - a bound is undefined (beta_x = 0, spectral gap >= 1)
    """

    def __init__(
        self,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        suggestion: Optional[str] = None,
        original_error: Optional[Exception] = None
    ):
        super().__init__(
            message=message,
            details=details,
            category=ErrorCategory.PRIVACY,
            severity=ErrorSeverity.HIGH,
            suggestion=suggestion,
            original_error=original_error
        )


class ReportError(DPMixError):
    """
    Result writing / reading errors

    Raised when:
    - An output file cannot be written
    - A result file cannot be read
    """

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
        suggestion: Optional[str] = None,
        original_error: Optional[Exception] = None
    ):
        if path:
            details = details or {}
            details['path'] = path

        super().__init__(
            message=message,
            details=details,
            category=ErrorCategory.REPORTING,
            severity=ErrorSeverity.MEDIUM,
            suggestion=suggestion,
            original_error=original_error
        )


class SchemaError(ReportError):
    """Result file does not carry the expected columns"""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        missing: Optional[list] = None,
        suggestion: Optional[str] = None
    ):
        details = {'missing_columns': missing} if missing else None
        super().__init__(
            message,
            path=path,
            details=details,
            suggestion=suggestion or "Summarize only CSV files written by `dpmixsgd run`"
        )


# Helper functions

def wrap_exception(
    original_error: Exception,
    message: Optional[str] = None,
    error_class: type = DPMixError,
    **kwargs
) -> DPMixError:
    """
    Wrap generic exception into a dpmixsgd exception

    Args:
        original_error: Original exception
        message: Custom message (uses original if None)
        error_class: Exception class to use
        **kwargs: Additional arguments for error class

    Returns:
        dpmixsgd exception
    """
    msg = message or str(original_error)
    return error_class(
        message=msg,
        original_error=original_error,
        **kwargs
    )


def format_error_message(error: DPMixError) -> str:
    """
    Format error message for plain-text display

    Args:
        error: dpmixsgd error

    Returns:
        Formatted error message
    """
    lines = [f"{error.__class__.__name__}: {error.message}"]

    if error.details:
        lines.append("\nDetails:")
        for key, value in error.details.items():
            lines.append(f"  - {key}: {value}")

    if error.suggestion:
        lines.append(f"\nSuggestion: {error.suggestion}")

    if error.original_error:
        lines.append(f"\nOriginal error: {error.original_error}")

    return "\n".join(lines)
