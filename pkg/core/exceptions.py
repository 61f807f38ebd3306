"""Dynamics Toolkit Exceptions Module.

This module defines custom exceptions for the dynamics toolkit. Library code
raises them; only the command-line front end turns them into exit codes.
"""

from typing import Optional, Sequence


class DynamicsException(Exception):
    """Base exception class for all toolkit exceptions."""
    exit_code = 3


class ConfigurationError(DynamicsException):
    """Exception raised when user input or a precondition is invalid."""
    exit_code = 2


class NumericError(DynamicsException):
    """Exception raised when a numerical procedure fails."""
    pass


class RootFindingError(NumericError):
    """Exception raised when simultaneous root iteration does not converge."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NotDivisibleError(NumericError):
    """Exception raised when an exact polynomial division leaves a remainder."""

    def __init__(self, message: str, remainder_norm: float = float("nan"), period: Optional[int] = None):
        super().__init__(f"{message} (remainder norm {remainder_norm:.3e})")
        self.remainder_norm = remainder_norm
        self.period = period


class DegenerateMapError(NumericError):
    """Exception raised when a lift is degenerate or produces non-finite values."""
    pass


class CycleGroupingError(NumericError):
    """Exception raised when periodic points cannot be grouped into cycles unambiguously."""

    def __init__(self, message: str, parameter=None, period: Optional[int] = None):
        super().__init__(message)
        self.parameter = parameter
        self.period = period


class ContinuationError(NumericError):
    """Exception raised when a Newton continuation fails for every start."""

    def __init__(self, message: str, failures: Sequence[int] = ()):
        super().__init__(message)
        self.failures = list(failures)


class VerificationError(DynamicsException):
    """Exception raised when a verification check fails."""
    exit_code = 1
