"""Definitions of exceptions used in freelip."""

import dataclasses
from typing import TYPE_CHECKING, Any, Optional

if TYPE_CHECKING:
    from .metric_core import ValidationReport


@dataclasses.dataclass
class ErrorDetails:
    code: str
    message: str
    context: Optional[dict[str, Any]] = None


class FreeLipException(Exception):
    """Base freelip exception."""

    message: str
    error_details: Optional[ErrorDetails]

    def __init__(self, message: str, details: Optional[ErrorDetails] = None) -> None:
        super().__init__(message)
        self.message = message
        self.error_details = details

    def __str__(self) -> str:
        return self.message


class MetricValidationException(FreeLipException):
    """Indicates that a distance matrix violates the (pseudo)metric axioms."""

    report: "ValidationReport"

    def __init__(self, message: str, report: "ValidationReport") -> None:
        super().__init__(message, ErrorDetails(code="invalid_metric", message=message))
        self.report = report


class SolverException(FreeLipException):
    """Indicates that a linear program or transport problem could not be solved."""


class InfeasibleProblemException(SolverException):
    """Indicates that a linear program has no feasible point."""


class SchemaException(FreeLipException):
    """Indicates there's something wrong with an input file or configuration."""
