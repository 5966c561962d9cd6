"""
Cumulant generating function of the block density.

Lambda(theta) = lim (1/n) log E[exp(n theta Z_n)] is squeezed between a
Toeplitz-spectral upper bound and a combinatorial lower bound; the two agree
and give a three-piece closed form. Finite-n values come from banded row
sweeps, and the lower bound is cross-checked by maximising its two
Stirling-limit objectives on a grid.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit, xlogy

from .core import EmptyWeightInterval, logger
from .mpa import (
    DEFAULT_TOL,
    TRUNCATION_PADDING,
    adaptive_truncation,
    balanced_vectors,
    sweep_D,
    sweep_E,
)
from .params import Params, theta_breakpoints

_log = logger.getChild("cgf")

DEFAULT_GRID = 2000
AGREEMENT_TOL = 1e-12


class Branch(Enum):
    """Piece of the three-piece formula that applies at theta."""

    LEFT = "Left"
    MIDDLE = "Middle"
    RIGHT = "Right"


class CgfKind(Enum):
    CLOSED = "Closed"
    UPPER = "Upper"
    LOWER = "Lower"
    FINITE_N = "FiniteN"
    NUMERIC_VARIATIONAL = "NumericVariational"


@dataclass(frozen=True)
class CgfValue:
    """One evaluation of Lambda with its branch and provenance."""

    theta: float
    value: float
    branch: Branch
    kind: CgfKind
    n: Optional[int] = None

    @property
    def label(self) -> str:
        if self.kind is CgfKind.FINITE_N:
            return f"FiniteN({self.n})"
        return self.kind.value


@dataclass(frozen=True)
class ToeplitzWeight:
    """Weight s of the sequence space in which the Toeplitz bound is taken."""

    s: float

    def __post_init__(self) -> None:
        if not self.s > 0:
            raise ValueError(f"Toeplitz weight must be positive, got {self.s}")

    @property
    def sqrt(self) -> float:
        return math.sqrt(self.s)


def weight_interval(p: Params) -> Tuple[float, float]:
    """
    Admissible weights ((1/alpha - 1)^2, 1/lambda1^2).

    Raises:
        EmptyWeightInterval: If the interval is empty (product regime)
    """
    low = float(p.r**2)
    high = float(1 / p.lambda1**2)
    if not low < high:
        raise EmptyWeightInterval(
            f"weight interval ({low}, {high}) is empty for alpha={p.alpha}"
        )
    return low, high


def branch_at(p: Params, theta: float) -> Branch:
    """Which piece of the closed form is active at theta."""
    if p.is_product:
        return Branch.LEFT
    breaks = theta_breakpoints(p)
    if theta <= breaks.theta1:
        return Branch.LEFT
    if theta <= breaks.theta2:
        return Branch.MIDDLE
    return Branch.RIGHT


def symbol(theta: float, s: float, zeta: complex) -> complex:
    """Toeplitz symbol kappa(zeta) of the rescaled e^theta D + E."""
    root = math.sqrt(s)
    return math.exp(theta) / (zeta * root) + 1 + math.exp(theta) + zeta * root


def spectral_radius_weighted(theta: float, s: float) -> float:
    """kappa(1) = 1 + sqrt(s) + e^theta (1 + 1/sqrt(s))."""
    if not s > 0:
        raise ValueError(f"Toeplitz weight must be positive, got {s}")
    root = math.sqrt(s)
    return 1.0 + root + math.exp(theta) * (1.0 + 1.0 / root)


def symbol_image_max_modulus(theta: float, s: float, points: int = 100) -> float:
    """Largest |kappa| over ``points`` equally spaced angles of the unit circle."""
    angles = np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)
    root = math.sqrt(s)
    zeta = np.exp(1j * angles)
    values = math.exp(theta) / (zeta * root) + 1 + math.exp(theta) + zeta * root
    return float(np.max(np.abs(values)))


def optimal_weight(p: Params, theta: float) -> ToeplitzWeight:
    """
    Weight minimising kappa(1; s) over the admissible interval.

    The unconstrained minimiser e^theta is clamped to the interval ends. In
    the product regime the interval is empty and the w-side end
    (1/alpha - 1)^2 is used, which reproduces the Bernoulli(alpha) value.
    """
    if p.is_product:
        return ToeplitzWeight(float(p.r**2))
    low, high = weight_interval(p)
    return ToeplitzWeight(min(max(math.exp(theta), low), high))


def upper_bound_at(p: Params, theta: float, s: float) -> float:
    """log kappa(1; s) + log c for a given weight."""
    return math.log(spectral_radius_weighted(theta, s)) + math.log(p.c)


def cgf_upper(p: Params, theta: float) -> CgfValue:
    """Toeplitz upper bound at the optimal weight."""
    weight = optimal_weight(p, theta)
    return CgfValue(
        theta=theta,
        value=upper_bound_at(p, theta, weight.s),
        branch=branch_at(p, theta),
        kind=CgfKind.UPPER,
    )


def _left_piece(p: Params, theta: float) -> float:
    alpha = float(p.alpha)
    tilted = float(np.logaddexp(theta - math.log1p(-alpha), -math.log(alpha)))
    return tilted + math.log(p.c)


def _middle_piece(p: Params, theta: float) -> float:
    return 2.0 * float(np.logaddexp(0.0, theta / 2.0)) + math.log(p.c)


def _right_piece(p: Params, theta: float) -> float:
    lam = float(p.lambda1)
    return (
        float(np.logaddexp(0.0, math.log(lam) + theta))
        + math.log1p(1.0 / lam)
        + math.log(p.c)
    )


def _piece(p: Params, theta: float, branch: Branch) -> float:
    if branch is Branch.LEFT:
        return _left_piece(p, theta)
    if branch is Branch.MIDDLE:
        return _middle_piece(p, theta)
    return _right_piece(p, theta)


def cgf_lower(p: Params, theta: float) -> CgfValue:
    """Three-piece combinatorial lower bound."""
    branch = branch_at(p, theta)
    return CgfValue(
        theta=theta,
        value=_piece(p, theta, branch),
        branch=branch,
        kind=CgfKind.LOWER,
    )


def cgf_closed(p: Params, theta: float) -> CgfValue:
    """
    Closed form of Lambda, the common value of both bounds.

    Raises:
        ArithmeticError: If the two bounds disagree beyond 1e-12
    """
    lower = cgf_lower(p, theta)
    upper = cgf_upper(p, theta)
    if abs(upper.value - lower.value) > AGREEMENT_TOL * max(1.0, abs(lower.value)):
        raise ArithmeticError(
            f"bounds disagree at theta={theta}: {lower.value} vs {upper.value}"
        )
    return CgfValue(
        theta=theta, value=lower.value, branch=lower.branch, kind=CgfKind.CLOSED
    )


def cgf_derivative(p: Params, theta: float) -> float:
    """Lambda'(theta): a logistic function on each piece."""
    branch = branch_at(p, theta)
    if branch is Branch.LEFT:
        alpha = float(p.alpha)
        return float(expit(theta + math.log(alpha) - math.log1p(-alpha)))
    if branch is Branch.MIDDLE:
        return float(expit(theta / 2.0))
    return float(expit(theta + math.log(float(p.lambda1))))


def _finite_n_log_moment(p: Params, theta: float, n: int, K: int) -> float:
    w_hat, v_hat, sigma = balanced_vectors(p, K)
    weight = math.exp(theta)
    row = w_hat.copy()
    log_scale = 0.0
    for _ in range(n):
        row = weight * sweep_D(row, sigma) + sweep_E(row, sigma)
        norm = float(row.sum())
        row /= norm
        log_scale += math.log(norm)
    log_moment = log_scale + math.log(float(row @ v_hat)) - math.log(
        float(w_hat @ v_hat)
    )
    return math.log(p.c) + log_moment / n


def cgf_finite_n(
    p: Params, theta: float, n: int, tol: float = DEFAULT_TOL
) -> CgfValue:
    """
    (1/n) log E[exp(n theta Z_n)] at finite n.

    Computed as (1/n) log[c^n w^T (e^theta D + E)^n v / w^T v] with one
    renormalised banded sweep per site. The product measure has independent
    sites, so there the value does not depend on n.

    Raises:
        ValueError: If n < 1
        NoConvergence: If the truncation fails to stabilise
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if p.is_product:
        value = _left_piece(p, theta)
    else:
        result = adaptive_truncation(
            lambda K: np.array([_finite_n_log_moment(p, theta, n, K)]),
            start=n + TRUNCATION_PADDING,
            tol=tol,
            relative=False,
            what=f"Lambda_{n}({theta:g})",
        )
        value = float(result[0])
    return CgfValue(
        theta=theta,
        value=value,
        branch=branch_at(p, theta),
        kind=CgfKind.FINITE_N,
        n=n,
    )


def lb1_objective(
    eps: np.ndarray, delta: np.ndarray, theta: float, lam: float
) -> np.ndarray:
    """Exponential rate of the j = p terms; -inf outside 0 <= delta <= eps <= 1."""
    eps, delta = np.broadcast_arrays(np.asarray(eps, float), np.asarray(delta, float))
    inside = (delta >= 0) & (delta <= eps) & (eps <= 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        value = (
            -xlogy(eps - delta, eps - delta)
            + xlogy(1 - delta, 1 - delta)
            + delta * math.log1p(lam)
            + eps * theta
            - 2 * xlogy(1 - eps, 1 - eps)
            - xlogy(eps, eps)
        )
    result: np.ndarray = np.where(inside, value, -np.inf)
    return result


def lb2_objective(
    eps: np.ndarray, delta: np.ndarray, theta: float, alpha: float
) -> np.ndarray:
    """Exponential rate of the j = 0 terms.

    -inf outside the triangle eps, delta >= 0, eps + delta <= 1.
    """
    eps, delta = np.broadcast_arrays(np.asarray(eps, float), np.asarray(delta, float))
    inside = (delta >= 0) & (eps >= 0) & (eps + delta <= 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        value = (
            xlogy(1 - delta, 1 - delta)
            - xlogy(1 - delta - eps, 1 - delta - eps)
            - delta * math.log(alpha)
            - 2 * xlogy(eps, eps)
            - xlogy(1 - eps, 1 - eps)
            + eps * theta
        )
    result: np.ndarray = np.where(inside, value, -np.inf)
    return result


def growth_lambda(p: Params) -> float:
    """
    Exponential growth of w^T D^b v / w^T v is (1 + growth_lambda)^b.

    This is lambda1 when w^T v converges and 1/(1/alpha - 1) = lambda2 in the
    product regime, where only the w component survives.
    """
    return float(p.lambda2 if p.is_product else p.lambda1)


def lb1_optimizer(p: Params, theta: float) -> Tuple[float, float]:
    """Analytic maximiser (eps, delta) of the LB1 objective."""
    lam = growth_lambda(p)
    if theta <= -2.0 * math.log(lam):
        return float(expit(theta / 2.0)), 0.0
    eps = float(expit(theta + math.log(lam)))
    return eps, ((1.0 + lam) * eps - 1.0) / lam


def lb2_optimizer(p: Params, theta: float) -> Tuple[float, float]:
    """Analytic maximiser (eps, delta) of the LB2 objective."""
    alpha = float(p.alpha)
    if theta <= theta_breakpoints(p).theta1:
        eps = float(expit(theta + math.log(alpha) - math.log1p(-alpha)))
        return eps, 1.0 - eps / (1.0 - alpha)
    return float(expit(theta / 2.0)), 0.0


@dataclass(frozen=True)
class VariationalOptimum:
    """Grid maximum of one objective (log c not included)."""

    value: float
    eps: float
    delta: float


def variational_argmax(
    p: Params, theta: float, grid: int, objective: str
) -> VariationalOptimum:
    """
    Maximise the LB1 or LB2 objective over the nodes k/grid of [0, 1]^2.

    Args:
        p: Model parameters
        theta: Tilt parameter
        grid: Number of cells per axis, at least 100
        objective: "lb1" or "lb2"
    """
    if grid < 100:
        raise ValueError("grid must be >= 100")
    nodes = np.arange(grid + 1) / grid
    best = VariationalOptimum(-math.inf, math.nan, math.nan)
    lam = growth_lambda(p)
    alpha = float(p.alpha)
    for eps in nodes:
        if objective == "lb1":
            row = lb1_objective(np.full_like(nodes, eps), nodes, theta, lam)
        elif objective == "lb2":
            row = lb2_objective(np.full_like(nodes, eps), nodes, theta, alpha)
        else:
            raise ValueError(f"unknown objective {objective!r}")
        k = int(np.argmax(row))
        if row[k] > best.value:
            best = VariationalOptimum(float(row[k]), float(eps), float(nodes[k]))
    return best


def variational_lb_numeric(p: Params, theta: float, grid: int = DEFAULT_GRID) -> float:
    """Larger of the two grid optima, plus log c."""
    first = variational_argmax(p, theta, grid, "lb1")
    second = variational_argmax(p, theta, grid, "lb2")
    _log.debug(
        "variational theta=%g lb1=%g at %s lb2=%g at %s",
        theta,
        first.value,
        (first.eps, first.delta),
        second.value,
        (second.eps, second.delta),
    )
    return max(first.value, second.value) + math.log(p.c)


def cgf_variational(p: Params, theta: float, grid: int = DEFAULT_GRID) -> CgfValue:
    return CgfValue(
        theta=theta,
        value=variational_lb_numeric(p, theta, grid),
        branch=branch_at(p, theta),
        kind=CgfKind.NUMERIC_VARIATIONAL,
    )


__all__ = [
    "DEFAULT_GRID",
    "Branch",
    "CgfKind",
    "CgfValue",
    "ToeplitzWeight",
    "weight_interval",
    "branch_at",
    "symbol",
    "spectral_radius_weighted",
    "symbol_image_max_modulus",
    "optimal_weight",
    "upper_bound_at",
    "cgf_upper",
    "cgf_lower",
    "cgf_closed",
    "cgf_derivative",
    "cgf_finite_n",
    "lb1_objective",
    "lb2_objective",
    "growth_lambda",
    "lb1_optimizer",
    "lb2_optimizer",
    "VariationalOptimum",
    "variational_argmax",
    "variational_lb_numeric",
    "cgf_variational",
]
