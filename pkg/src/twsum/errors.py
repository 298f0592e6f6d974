"""Exception types shared across the package."""

from __future__ import annotations


class TwsumError(Exception):
    """Base class for all package errors."""


class ParameterError(TwsumError, ValueError):
    """Invalid parameters or inputs violating a documented precondition."""


class GenerationError(TwsumError):
    """A generator exhausted its retry budget."""


class ResourceError(TwsumError):
    """A configured budget (DP width, tuple count, enumeration size) was exceeded."""


class ParseError(TwsumError, ValueError):
    """Malformed input file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DecompositionError(TwsumError, ValueError):
    """A decomposition is invalid for the formula or graph it is used with."""


class InvariantViolation(AssertionError):
    """An internal arithmetic invariant failed; indicates a bug, never recoverable."""
