"""
Normal ordering of (x D + E)^n under the relation DE = D + E.

Every power expands as

    (x D + E)^n = sum_{p=1..n} sum_{j=0..p} f^n_{p,j}(x) E^(p-j) D^j

with polynomials f^n_{p,j} in x = e^theta having non-negative integer
coefficients. They are computed here by multiplying on the right (rec1) and
on the left (rec2), together with the closed forms of the j = p and j = 0
columns and the reflection symmetry that links them.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, List, Tuple

import sympy as sp

from .core import logger
from .mpa import contraction
from .params import Params

_log = logger.getChild("normalorder")

x = sp.Symbol("x")
ZERO = sp.Poly(0, x, domain="ZZ")
ONE = sp.Poly(1, x, domain="ZZ")
X = sp.Poly(x, x, domain="ZZ")

CoeffPoly = sp.Poly


def make_poly(coeffs: dict[int, int]) -> CoeffPoly:
    """Build a CoeffPoly from a {power: coefficient} map."""
    if not coeffs:
        return ZERO
    return sp.Poly.from_dict({(r,): c for r, c in coeffs.items()}, x, domain="ZZ")


def poly_coefficients(poly: CoeffPoly) -> dict[int, int]:
    """Return the non-zero coefficients of poly as {power: coefficient}."""
    return {int(r): int(c) for (r,), c in poly.terms() if c != 0}


def evaluate_poly(poly: CoeffPoly, value: float) -> float:
    return float(sum(float(c) * value**r for r, c in poly_coefficients(poly).items()))


@dataclass(frozen=True)
class CoeffTable:
    """Triangular table of f^n_{p,j}, stored as entries[p - 1][j]."""

    n: int
    entries: Tuple[Tuple[CoeffPoly, ...], ...]

    def f(self, p: int, j: int) -> CoeffPoly:
        if not 1 <= p <= self.n or not 0 <= j <= p:
            raise IndexError(f"no entry f[{p}][{j}] in a table of order {self.n}")
        return self.entries[p - 1][j]

    def __getitem__(self, key: Tuple[int, int]) -> CoeffPoly:
        return self.f(*key)

    def items(self) -> Iterator[Tuple[int, int, CoeffPoly]]:
        for p, row in enumerate(self.entries, start=1):
            for j, poly in enumerate(row):
                yield p, j, poly

    def mass(self) -> int:
        """Sum of every entry evaluated at x = 1."""
        return sum(sum(poly_coefficients(poly).values()) for _, _, poly in self.items())

    def is_nonnegative(self) -> bool:
        return all(
            c >= 0
            for _, _, poly in self.items()
            for c in poly_coefficients(poly).values()
        )


def _base_table() -> CoeffTable:
    return CoeffTable(n=1, entries=((ONE, X),))


def _step_rec1(prev: CoeffTable) -> CoeffTable:
    """Multiply (x D + E)^(n-1) on the right by (x D + E)."""
    n = prev.n + 1

    def g(p: int, j: int) -> CoeffPoly:
        return prev.f(p, j) if 1 <= p <= prev.n and 0 <= j <= p else ZERO

    rows: List[Tuple[CoeffPoly, ...]] = []
    for p in range(1, n + 1):
        row = []
        for j in range(p + 1):
            total = X * g(p - 1, j - 1) if j > 0 else g(p - 1, 0)
            for k in range(p, n):
                total = total + g(k, k - p + max(j, 1))
            row.append(total)
        rows.append(tuple(row))
    return CoeffTable(n=n, entries=tuple(rows))


def _step_rec2(prev: CoeffTable) -> CoeffTable:
    """Multiply (x D + E)^(n-1) on the left by (x D + E)."""
    n = prev.n + 1

    def g(p: int, j: int) -> CoeffPoly:
        return prev.f(p, j) if 1 <= p <= prev.n and 0 <= j <= p else ZERO

    rows: List[Tuple[CoeffPoly, ...]] = []
    for p in range(1, n + 1):
        row = []
        for j in range(p):
            tail = ZERO
            for k in range(p, n):
                tail = tail + g(k, j)
            row.append(g(p - 1, j) + X * tail)
        top = ZERO
        for k in range(p - 1, n):
            top = top + g(k, p - 1)
        row.append(X * top)
        rows.append(tuple(row))
    return CoeffTable(n=n, entries=tuple(rows))


def _table_builder(
    step: Callable[[CoeffTable], CoeffTable],
) -> Callable[[int], CoeffTable]:
    @lru_cache(maxsize=None)
    def build(n: int) -> CoeffTable:
        if n < 1:
            raise ValueError("order n must be >= 1")
        if n == 1:
            return _base_table()
        return step(build(n - 1))

    return build


coeff_table_rec1 = _table_builder(_step_rec1)
coeff_table_rec2 = _table_builder(_step_rec2)


def coeff_tables(n: int) -> Tuple[CoeffTable, CoeffTable]:
    """
    Build the order-n table by both recursions.

    Args:
        n: Order of the expansion, at least 1

    Returns:
        (table from rec1, table from rec2); the two are equal entry by entry

    Raises:
        ValueError: If n < 1
    """
    first, second = coeff_table_rec1(n), coeff_table_rec2(n)
    if first != second:
        _log.warning("rec1 and rec2 disagree at order %d", n)
    return first, second


def _check_orders(n: int, p: int) -> None:
    if not 1 <= p <= n:
        raise ValueError(f"need 1 <= p <= n, got n={n}, p={p}")


def _integral(value: Fraction) -> int:
    if value.denominator != 1:
        raise ArithmeticError(f"expected an integer coefficient, got {value}")
    return value.numerator


def f_pp_closed(n: int, p: int) -> CoeffPoly:
    """Closed form of f^n_{p,p}."""
    _check_orders(n, p)
    if p == n:
        return make_poly({n: 1})
    factor = Fraction(p, n)
    return make_poly(
        {
            r: _integral(factor * math.comb(n - p - 1, r - p) * math.comb(n, r))
            for r in range(p, n)
        }
    )


def f_p0_closed(n: int, p: int) -> CoeffPoly:
    """Closed form of f^n_{p,0}."""
    _check_orders(n, p)
    if p == n:
        return ONE
    factor = Fraction(p, n)
    return make_poly(
        {
            r: _integral(factor * math.comb(n - p - 1, r - 1) * math.comb(n, r))
            for r in range(1, n - p + 1)
        }
    )


def reflect(poly: CoeffPoly, n: int) -> CoeffPoly:
    """Return x^n poly(1/x)."""
    return make_poly({n - r: c for r, c in poly_coefficients(poly).items()})


def check_symmetry(n: int) -> bool:
    """True iff f^n_{p,j}(x) = x^n f^n_{p,p-j}(1/x) for every (p, j)."""
    table = coeff_table_rec1(n)
    for p, j, poly in table.items():
        if poly != reflect(table.f(p, p - j), n):
            _log.warning("symmetry fails at n=%d, p=%d, j=%d", n, p, j)
            return False
    return True


def binom_identity_sides(n: int, p: int, r: int) -> Tuple[int, int]:
    """
    Both sides of sum_{k=p..r} k C(n-1-k, r-k) = (np - pr + r) C(n-p, r-p) / (n-r+1).

    Raises:
        ValueError: Unless n >= 2 and 1 <= p <= r <= n - 1
    """
    if n < 2 or not 1 <= p <= r <= n - 1:
        raise ValueError(f"need n >= 2 and 1 <= p <= r <= n-1, got ({n}, {p}, {r})")
    left = sum(k * math.comb(n - 1 - k, r - k) for k in range(p, r + 1))
    right = Fraction((n * p - p * r + r) * math.comb(n - p, r - p), n - r + 1)
    return left, _integral(right)


def entry_mass(n: int, p: int) -> int:
    """Value of f^n_{p,j} at x = 1, which does not depend on j."""
    _check_orders(n, p)
    numerator = p * math.factorial(2 * n - 1 - p)
    return _integral(
        Fraction(numerator, math.factorial(n) * math.factorial(n - p))
    )


def table_mass(n: int) -> int:
    """Catalan number C(2n+2, n+1) / (n+2), the mass of the order-n table."""
    if n < 1:
        raise ValueError("order n must be >= 1")
    return math.comb(2 * n + 2, n + 1) // (n + 2)


def reconstruct_moment_sum(
    p: Params, theta: float, n: int, normalized: bool = False
) -> float:
    """
    Re-assemble w^T (e^theta D + E)^n v from the normal-ordered expansion.

    Each term f^n_{p',j}(e^theta) multiplies the exact contraction
    w^T E^(p'-j) D^j v. With ``normalized`` every contraction is divided by
    w^T v, which keeps the sum finite in the product regime.

    Raises:
        DivergentSeries: For the unnormalised sum in the product regime
    """
    if n < 1:
        raise ValueError("order n must be >= 1")
    table = coeff_table_rec1(n)
    value = math.exp(theta)
    total = 0.0
    for order, j, poly in table.items():
        weight = float(contraction(p, order - j, j, normalized=normalized))
        total += evaluate_poly(poly, value) * weight
    return total


def coeff_table_rows(table: CoeffTable) -> List[Tuple[int, int, int, int]]:
    """Flatten a table into (p, j, power, coefficient) rows."""
    rows = []
    for order, j, poly in table.items():
        for r, coefficient in sorted(poly_coefficients(poly).items()):
            rows.append((order, j, r, coefficient))
    return rows


__all__ = [
    "CoeffPoly",
    "CoeffTable",
    "make_poly",
    "poly_coefficients",
    "evaluate_poly",
    "coeff_table_rec1",
    "coeff_table_rec2",
    "coeff_tables",
    "f_pp_closed",
    "f_p0_closed",
    "reflect",
    "check_symmetry",
    "binom_identity_sides",
    "entry_mass",
    "table_mass",
    "reconstruct_moment_sum",
    "coeff_table_rows",
]
