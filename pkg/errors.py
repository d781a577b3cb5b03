"""
errors.py - Exception hierarchy shared by the generators, estimator and CLI
"""

from typing import Optional


class HyperfractalError(ValueError):
    """Base class for every error raised on invalid model input."""


class ParameterError(HyperfractalError):
    """Numeric parameter outside its admissible range."""


class SizeBudgetError(HyperfractalError):
    """Requested grid would exceed the configured depth / segment budget."""


class GeometryError(HyperfractalError):
    """Invalid centers, covariance or tessellation input."""


class FitError(HyperfractalError):
    """Rank curve or power-law fit is degenerate."""


class ConfigError(HyperfractalError):
    """City configuration document failed validation."""


class CsvFormatError(HyperfractalError):
    """Street CSV could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
