"""
Model parameters and regime classification.

A semi-infinite TASEP is fixed by its injection rate alpha and the asymptotic
density rho of the initial profile. Together they select one of three regimes,
each with its own stationary current c and spectral pair lambda1, lambda2.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict

from .core import OutOfRange, RationalLike, UncoveredRegime, as_rational, logger

_log = logger.getChild("params")

HALF = Fraction(1, 2)


class Regime(Enum):
    """Parameter regimes with a known rate function."""

    CASE_A = "CaseA"  # alpha <= 1/2, product measure
    CASE_B = "CaseB"  # maximal current, c = 1/4
    CASE_C = "CaseC"  # high density, c = rho (1 - rho)


@dataclass(frozen=True)
class ThetaBreakpoints:
    """Breakpoints of the three-piece cumulant generating function."""

    theta1: float
    theta2: float


@dataclass(frozen=True)
class Params:
    """Validated (alpha, rho) together with every derived constant."""

    alpha: Fraction
    rho: Fraction
    c: Fraction
    lambda1: Fraction
    lambda2: Fraction
    regime: Regime

    @property
    def r(self) -> Fraction:
        """Ratio 1/alpha - 1 of the geometric left boundary vector."""
        return 1 / self.alpha - 1

    @property
    def tail_ratio(self) -> Fraction:
        """Geometric ratio q = r * lambda1 of the terms w_k v_k."""
        return self.r * self.lambda1

    @property
    def degenerate(self) -> bool:
        """True when lambda1 == lambda2 (c = 1/4)."""
        return self.lambda1 == self.lambda2

    @property
    def is_product(self) -> bool:
        """True in the regime whose invariant measure is Bernoulli(alpha)."""
        return self.regime is Regime.CASE_A

    @property
    def typical_density(self) -> Fraction:
        """Density at which the rate function vanishes."""
        if self.regime is Regime.CASE_A:
            return self.alpha
        if self.regime is Regime.CASE_B:
            return HALF
        return self.rho

    def to_dict(self) -> Dict[str, Any]:
        """Return a JSON-friendly description of the parameters."""
        return {
            "alpha": str(self.alpha),
            "rho": str(self.rho),
            "c": str(self.c),
            "lambda1": str(self.lambda1),
            "lambda2": str(self.lambda2),
            "regime": self.regime.value,
        }


def classify_regime(alpha: Fraction, rho: Fraction) -> Regime:
    """
    Classify (alpha, rho) into a covered regime.

    Raises:
        OutOfRange: If alpha is not in (0, 1) or rho is not in [0, 1)
        UncoveredRegime: If no rate function is known for the pair
    """
    if not 0 < alpha < 1:
        raise OutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 <= rho < 1:
        raise OutOfRange(f"rho must lie in [0, 1), got {rho}")

    if alpha <= HALF:
        if rho < 1 - alpha:
            return Regime.CASE_A
        raise UncoveredRegime(
            f"alpha={alpha} <= 1/2 requires rho < 1 - alpha = {1 - alpha}, got {rho}"
        )
    if rho <= HALF:
        return Regime.CASE_B
    if rho < alpha:
        return Regime.CASE_C
    raise UncoveredRegime(f"alpha={alpha} > 1/2 requires rho < alpha, got {rho}")


def make_params(alpha: RationalLike, rho: RationalLike) -> Params:
    """
    Build validated parameters for the given injection rate and initial density.

    Args:
        alpha: Injection rate, exact rational in (0, 1)
        rho: Asymptotic initial density, exact rational in [0, 1)

    Returns:
        Params with c, lambda1, lambda2 and the regime filled in

    Raises:
        OutOfRange: If alpha or rho is outside its domain
        UncoveredRegime: If (alpha, rho) is outside every covered regime
    """
    a = as_rational(alpha)
    p = as_rational(rho)
    regime = classify_regime(a, p)

    if regime is Regime.CASE_A:
        c = a * (1 - a)
        lambda1 = (1 - a) / a
    elif regime is Regime.CASE_B:
        c = Fraction(1, 4)
        lambda1 = Fraction(1)
    else:
        c = p * (1 - p)
        lambda1 = p / (1 - p)

    params = Params(
        alpha=a, rho=p, c=c, lambda1=lambda1, lambda2=1 / lambda1, regime=regime
    )
    _log.debug("params alpha=%s rho=%s regime=%s", a, p, regime.value)
    return params


def theta_breakpoints(p: Params) -> ThetaBreakpoints:
    """Return (2 log(1/alpha - 1), -2 log lambda1)."""
    return ThetaBreakpoints(
        theta1=2.0 * math.log(p.r), theta2=-2.0 * math.log(p.lambda1)
    )


__all__ = [
    "Regime",
    "ThetaBreakpoints",
    "Params",
    "classify_regime",
    "make_params",
    "theta_breakpoints",
]
