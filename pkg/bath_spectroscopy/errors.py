"""Exceptions raised across bath_spectroscopy.

Every error also derives from the builtin exception a caller would naturally
catch (ValueError / ArithmeticError), so plain ``except ValueError`` keeps working.
"""
from typing import Optional


class BathSpectroscopyError(Exception):
    pass


class InvalidArgument(BathSpectroscopyError, ValueError):
    pass


class PreconditionViolation(BathSpectroscopyError, ValueError):
    pass


class NumericFailure(BathSpectroscopyError, ArithmeticError):
    def __init__(self, message: str, achieved_error: float):
        super().__init__(f"{message} (achieved error {achieved_error:.3e})")
        self.achieved_error = achieved_error


class InsufficientData(BathSpectroscopyError, ValueError):
    pass


class InsufficientVariation(BathSpectroscopyError, ValueError):
    pass


class InconsistentMeasurement(BathSpectroscopyError, ValueError):
    pass


class ConfigError(BathSpectroscopyError, ValueError):
    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if field is not None:
            location += f" [field: {field}]"
        if line is not None:
            location += f" [line: {line}]"
        super().__init__(message + location)
        self.field = field
        self.line = line
