"""
Core utilities for tasep-ldp: the error hierarchy, exact rational parsing and
the package logger.
"""

import logging
import math
from fractions import Fraction
from typing import Union

logger = logging.getLogger("tasep_ldp")

RationalLike = Union[int, Fraction, str, float]
Scalar = Union[Fraction, float]


class TasepError(Exception):
    """Base class for all errors raised by tasep-ldp.

    Every subclass carries a machine-parsable ``code`` and the exit code the
    command line uses when the error reaches it.
    """

    code = "TASEP_ERROR"
    exit_code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def one_line(self) -> str:
        """Return the single-line form written to stderr by the CLI."""
        return f"error={self.code} message={self.message}"


class OutOfRange(TasepError, ValueError):
    """A parameter lies outside its admissible domain."""

    code = "OUT_OF_RANGE"


class UncoveredRegime(TasepError, ValueError):
    """The (alpha, rho) pair falls in a region with no known rate function."""

    code = "UNCOVERED_REGIME"
    exit_code = 2


class TruncationTooSmall(TasepError, ValueError):
    """The requested truncation dimension is too small to be meaningful."""

    code = "TRUNCATION_TOO_SMALL"


class DegenerateSpectrum(TasepError, ArithmeticError):
    """A closed form needs lambda1 != lambda2 but the spectrum is degenerate."""

    code = "DEGENERATE_SPECTRUM"
    exit_code = 3


class DivergentSeries(TasepError, ArithmeticError):
    """An unnormalised contraction diverges (the product-measure regime)."""

    code = "DIVERGENT_SERIES"
    exit_code = 3


class EmptyWeightInterval(TasepError, ArithmeticError):
    """No Toeplitz weight s makes both boundary vectors square summable."""

    code = "EMPTY_WEIGHT_INTERVAL"
    exit_code = 3


class NoConvergence(TasepError, ArithmeticError):
    """An adaptive numerical scheme failed to stabilise."""

    code = "NO_CONVERGENCE"
    exit_code = 3


class UsageError(TasepError, ValueError):
    """The command line could not be parsed."""

    code = "USAGE_ERROR"


class CheckFailed(TasepError):
    """A verification suite reported at least one failing identity."""

    code = "CHECK_FAILED"
    exit_code = 4


def as_rational(value: RationalLike) -> Fraction:
    """
    Convert a user-supplied number to an exact rational.

    Strings may be ``"p/q"`` or decimals (``"0.7"`` is exactly 7/10). Floats are
    converted through their shortest decimal representation so that ``0.7``
    and ``"0.7"`` agree.

    Args:
        value: Integer, Fraction, string or float

    Returns:
        The exact rational value

    Raises:
        TypeError: If value has an unsupported type
        OutOfRange: If value is not a finite number
    """
    if isinstance(value, bool):
        raise TypeError("Argument must be a rational number, not bool")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise OutOfRange(f"{value} is not a finite number")
        return Fraction(repr(value))
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise OutOfRange(f"cannot parse {value!r} as a rational number") from exc
    raise TypeError("Argument must be an int, Fraction, str or float")


def format_rational(value: Fraction) -> str:
    """Render a rational as ``p/q`` (or ``p`` when integral)."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_decimal(value: Union[Fraction, float]) -> str:
    """Render a number with 15 significant digits."""
    return format(float(value), ".15g")


__all__ = [
    "RationalLike",
    "Scalar",
    "TasepError",
    "OutOfRange",
    "UncoveredRegime",
    "TruncationTooSmall",
    "DegenerateSpectrum",
    "DivergentSeries",
    "EmptyWeightInterval",
    "NoConvergence",
    "UsageError",
    "CheckFailed",
    "as_rational",
    "format_rational",
    "format_decimal",
    "logger",
]
