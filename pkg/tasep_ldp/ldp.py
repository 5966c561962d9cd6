"""
Rate function of the block density.

I(z) = sup_theta {z theta - Lambda(theta)} is evaluated in closed form (one
entropy-type expression per piece of Lambda) and, independently, by solving
Lambda'(theta) = z with bisection.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Tuple

from scipy.optimize import bisect
from scipy.special import xlogy

from .cgf import cgf_closed, cgf_derivative
from .core import NoConvergence, OutOfRange, logger
from .params import Params

_log = logger.getChild("ldp")

KINK_STEP = 1e-6
CURVATURE_STEP = 1e-3
KINK_TOL = 1e-4
MIN_CURVATURE_JUMP = 0.25
MAX_BRACKET_EXPANSIONS = 60


class Piece(Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"


@dataclass(frozen=True)
class RatePoint:
    """Value of the rate function at z, with the maximising theta."""

    z: float
    value: float
    piece: Piece
    theta_star: float


@dataclass(frozen=True)
class KinkDiagnostic:
    """Finite-difference behaviour of I on both sides of a kink."""

    z: float
    value_gap: float
    slope_gap: float
    curvature_left: float
    curvature_right: float

    @property
    def curvature_jump(self) -> float:
        scale = max(abs(self.curvature_left), abs(self.curvature_right))
        return abs(self.curvature_right - self.curvature_left) / scale

    @property
    def failed_criteria(self) -> List[str]:
        """Names of the kink conditions this point does not meet."""
        failed = []
        if not self.value_gap < KINK_TOL:
            failed.append(f"value gap {self.value_gap:.3g}")
        if not self.slope_gap < KINK_TOL:
            failed.append(f"slope gap {self.slope_gap:.3g}")
        if not self.curvature_jump > MIN_CURVATURE_JUMP:
            failed.append(f"curvature jump {self.curvature_jump:.3g}")
        return failed

    @property
    def is_kink(self) -> bool:
        """C^1 across z while the second derivative jumps."""
        return not self.failed_criteria


@dataclass(frozen=True)
class PhaseReport:
    """Densities at which the rate function is not analytic."""

    kinks: Tuple[float, ...]
    diagnostics: Tuple[KinkDiagnostic, ...] = ()

    @property
    def verified(self) -> bool:
        return all(d.is_kink for d in self.diagnostics)


def second_kink(p: Params) -> float:
    """1/(1 + lambda1): 1/2 at maximal current, 1 - rho in the high-density phase."""
    return float(1 / (1 + p.lambda1))


def piece_at(p: Params, z: float) -> Piece:
    if p.is_product or z <= float(1 - p.alpha):
        return Piece.P1
    if z <= second_kink(p):
        return Piece.P2
    return Piece.P3


def _check_density(z: float, open_interval: bool = False) -> None:
    if open_interval and not 0.0 < z < 1.0:
        raise OutOfRange(f"z must lie in (0, 1), got {z}")
    if not 0.0 <= z <= 1.0:
        raise OutOfRange(f"z must lie in [0, 1], got {z}")


def _logit(z: float) -> float:
    if z <= 0.0:
        return -math.inf
    if z >= 1.0:
        return math.inf
    return math.log(z) - math.log1p(-z)


def _relative_entropy(z: float, mean: float) -> float:
    """Bernoulli relative entropy with 0 log 0 = 0."""
    return float(xlogy(z, z / mean) + xlogy(1.0 - z, (1.0 - z) / (1.0 - mean)))


def rate_derivative(p: Params, z: float) -> float:
    """I'(z), equal to the maximising theta."""
    _check_density(z)
    piece = piece_at(p, z)
    if piece is Piece.P1:
        alpha = float(p.alpha)
        return _logit(z) - math.log(alpha) + math.log1p(-alpha)
    if piece is Piece.P2:
        return 2.0 * _logit(z)
    return _logit(z) - math.log(float(p.lambda1))


def rate_closed(p: Params, z: float) -> RatePoint:
    """
    Closed-form rate function.

    Args:
        p: Model parameters
        z: Block density in [0, 1]

    Returns:
        RatePoint with the piece that applies and the maximising theta

    Raises:
        OutOfRange: If z is outside [0, 1]
    """
    _check_density(z)
    piece = piece_at(p, z)
    log_c = math.log(p.c)
    if piece is Piece.P1:
        alpha = float(p.alpha)
        value = _relative_entropy(z, alpha) + math.log(alpha * (1.0 - alpha)) - log_c
    elif piece is Piece.P2:
        value = 2.0 * float(xlogy(z, z) + xlogy(1.0 - z, 1.0 - z)) - log_c
    else:
        lam = float(p.lambda1)
        value = _relative_entropy(z, lam / (1.0 + lam))
    return RatePoint(
        z=z, value=max(value, 0.0), piece=piece, theta_star=rate_derivative(p, z)
    )


def _bracket(
    gap: Callable[[float], float], low: float, high: float
) -> Tuple[float, float]:
    width = max(high - low, 1.0)
    for _ in range(MAX_BRACKET_EXPANSIONS):
        if gap(low) < 0.0 < gap(high):
            return low, high
        if gap(low) >= 0.0:
            low -= width
        if gap(high) <= 0.0:
            high += width
        width *= 2.0
        _log.debug("expanding bracket to [%g, %g]", low, high)
    raise NoConvergence(f"could not bracket the root in [{low}, {high}]")


def rate_numeric(p: Params, z: float, tol: float = 1e-12) -> RatePoint:
    """
    Legendre transform of Lambda by root-finding on its derivative.

    The piecewise inverses of Lambda' seed the bracket, which is then widened
    until the derivative changes sign and bisected down to ``tol``.

    Raises:
        OutOfRange: If z is not in (0, 1)
        NoConvergence: If the bracket or the bisection fails
    """
    _check_density(z, open_interval=True)
    alpha = float(p.alpha)
    seeds = [
        _logit(z) - math.log(alpha) + math.log1p(-alpha),
        2.0 * _logit(z),
        _logit(z) - math.log(float(p.lambda1)),
    ]

    def gap(theta: float) -> float:
        return cgf_derivative(p, theta) - z

    low, high = _bracket(gap, min(seeds) - 1.0, max(seeds) + 1.0)
    try:
        theta, info = bisect(gap, low, high, xtol=tol, maxiter=500, full_output=True)
    except (RuntimeError, ValueError) as exc:
        raise NoConvergence(f"bisection failed at z={z}: {exc}") from exc
    if not info.converged:
        raise NoConvergence(f"bisection did not converge at z={z}")
    value = z * theta - cgf_closed(p, theta).value
    return RatePoint(
        z=z, value=max(value, 0.0), piece=piece_at(p, z), theta_star=float(theta)
    )


def kink_diagnostics(p: Params, z0: float) -> KinkDiagnostic:
    """
    Compare value, slope and curvature of I just left and right of z0.

    One-sided limits of I and I' use second-order stencils, so the gaps stay
    O(h^2) even where the curvature is large. Steps shrink with the distance
    of z0 to the ends of [0, 1].
    """

    def rate(z: float) -> float:
        return rate_closed(p, z).value

    room = min(z0, 1.0 - z0)
    h = min(KINK_STEP, room / 100.0)
    f0 = rate(z0)
    left1, left2 = rate(z0 - h), rate(z0 - 2.0 * h)
    right1, right2 = rate(z0 + h), rate(z0 + 2.0 * h)
    value_gap = abs((2.0 * right1 - right2) - (2.0 * left1 - left2))
    slope_left = (3.0 * f0 - 4.0 * left1 + left2) / (2.0 * h)
    slope_right = (-3.0 * f0 + 4.0 * right1 - right2) / (2.0 * h)
    k = min(CURVATURE_STEP, room / 20.0)
    curvature_left = (f0 - 2.0 * rate(z0 - k) + rate(z0 - 2.0 * k)) / k**2
    curvature_right = (rate(z0 + 2.0 * k) - 2.0 * rate(z0 + k) + f0) / k**2
    return KinkDiagnostic(
        z=z0,
        value_gap=value_gap,
        slope_gap=abs(slope_right - slope_left),
        curvature_left=curvature_left,
        curvature_right=curvature_right,
    )


def phase_points(p: Params) -> PhaseReport:
    """Kink locations of I, each checked by finite differences."""
    if p.is_product:
        return PhaseReport(kinks=())
    kinks = (float(1 - p.alpha), second_kink(p))
    diagnostics = tuple(kink_diagnostics(p, z) for z in kinks)
    for diagnostic in diagnostics:
        if not diagnostic.is_kink:
            _log.warning(
                "kink check failed at z=%g: %s",
                diagnostic.z,
                ", ".join(diagnostic.failed_criteria),
            )
    return PhaseReport(kinks=kinks, diagnostics=diagnostics)


def default_z_grid(steps: int) -> List[float]:
    """Interior grid k/(steps + 1), k = 1..steps."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    return [k / (steps + 1) for k in range(1, steps + 1)]


__all__ = [
    "Piece",
    "RatePoint",
    "KinkDiagnostic",
    "PhaseReport",
    "second_kink",
    "piece_at",
    "rate_derivative",
    "rate_closed",
    "rate_numeric",
    "kink_diagnostics",
    "phase_points",
    "default_z_grid",
]
