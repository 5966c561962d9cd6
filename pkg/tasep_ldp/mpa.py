"""
Matrix product representation of the semi-infinite stationary measure.

The stationary cylinder probabilities are contractions

    P(eta) = c^n w^T prod_k [eta_k D + (1 - eta_k) E] v / (w^T v)

with D upper bidiagonal, E lower bidiagonal (unit entries), w geometric with
ratio 1/alpha - 1 and v built from the spectral pair lambda1, lambda2.

Two evaluation paths are provided. The exact path never truncates: a row
vector is kept as ``scale * w^T + head`` with ``head`` finitely supported,
because w is a left eigenvector of E and almost one of D. The float path uses
K-dimensional truncations in a diagonally rescaled basis and doubles K until
the answer stabilises.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np

from .core import (
    DegenerateSpectrum,
    DivergentSeries,
    NoConvergence,
    Scalar,
    TruncationTooSmall,
    logger,
)
from .params import Params
from .reports import CheckReport

_log = logger.getChild("mpa")

DEFAULT_TOL = 1e-12
TRUNCATION_PADDING = 16
MAX_TRUNCATION = 1 << 17

Configuration = Tuple[int, ...]


def as_configuration(eta: Union[str, Sequence[int]]) -> Configuration:
    """
    Normalise a 0/1 word given as a string ("0110") or a sequence of ints.

    Raises:
        ValueError: If an entry is not 0 or 1
    """
    bits = tuple(int(ch) for ch in eta) if isinstance(eta, str) else tuple(eta)
    for bit in bits:
        if bit not in (0, 1):
            raise ValueError("Configuration entries must be 0 or 1")
    return tuple(int(bit) for bit in bits)


def format_configuration(eta: Configuration) -> str:
    return "".join(str(bit) for bit in eta) or "-"


@lru_cache(maxsize=512)
def left_vector(p: Params, K: int) -> Tuple[Fraction, ...]:
    """Return (w_1, ..., w_K) with w_k = (1/alpha - 1)^(k-1)."""
    r = p.r
    w = [Fraction(1)]
    for _ in range(K - 1):
        w.append(w[-1] * r)
    return tuple(w[:K])


@lru_cache(maxsize=512)
def right_vector(p: Params, K: int) -> Tuple[Fraction, ...]:
    """Return (v_1, ..., v_K); v_k = k when lambda1 = lambda2 = 1."""
    trace = p.lambda1 + p.lambda2
    v = [Fraction(0), Fraction(1)]
    while len(v) <= K:
        v.append(trace * v[-1] - v[-2])
    return tuple(v[1 : K + 1])


def balanced_vectors(p: Params, K: int) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Return the float boundary vectors in the basis rescaled by sigma = lambda1.

    In that basis w_k sigma^k = lambda1 q^(k-1) and v_k sigma^(-k) stay bounded,
    D gets sigma on its superdiagonal and E gets 1/sigma on its subdiagonal.
    """
    _require_summable(p)
    sigma = float(p.lambda1)
    k = np.arange(1, K + 1, dtype=float)
    w_hat = sigma * float(p.tail_ratio) ** (k - 1.0)
    if p.degenerate:
        v_hat = k
    else:
        ratio = float(p.lambda2 / p.lambda1)
        v_hat = (1.0 - ratio**k) / float(p.lambda1 - p.lambda2)
    return w_hat, v_hat, sigma


def _require_summable(p: Params) -> None:
    if p.is_product:
        raise DivergentSeries(
            f"w^T v diverges for alpha={p.alpha} (tail ratio {p.tail_ratio} >= 1)"
        )


@dataclass(frozen=True)
class TruncatedSystem:
    """K x K truncations of D and E with the first K entries of w and v."""

    params: Params
    K: int
    w: Tuple[Scalar, ...]
    v: Tuple[Scalar, ...]
    exact: bool = True

    @property
    def wv(self) -> Scalar:
        """Truncated sum of w_k v_k."""
        return sum((wk * vk for wk, vk in zip(self.w, self.v)), Fraction(0))

    @cached_property
    def D(self) -> np.ndarray:
        return np.eye(self.K, dtype=np.int64) + np.eye(self.K, k=1, dtype=np.int64)

    @cached_property
    def E(self) -> np.ndarray:
        return np.eye(self.K, dtype=np.int64) + np.eye(self.K, k=-1, dtype=np.int64)

    def balanced(self) -> Tuple[np.ndarray, np.ndarray, float]:
        return balanced_vectors(self.params, self.K)


def build_truncated_system(p: Params, K: int, exact: bool = True) -> TruncatedSystem:
    """
    Build the K-dimensional truncation of the matrix product representation.

    Args:
        p: Model parameters
        K: Truncation dimension, at least 2
        exact: Keep w and v as rationals (True) or convert them to floats

    Raises:
        TruncationTooSmall: If K < 2
    """
    if K < 2:
        raise TruncationTooSmall(f"truncation dimension must be >= 2, got {K}")
    w: Tuple[Scalar, ...] = left_vector(p, K)
    v: Tuple[Scalar, ...] = right_vector(p, K)
    if not exact:
        w = tuple(float(x) for x in w)
        v = tuple(float(x) for x in v)
    return TruncatedSystem(params=p, K=K, w=w, v=v, exact=exact)


def verify_mpa_relations(p: Params, K: int) -> CheckReport:
    """
    Check DE = D + E, alpha w^T E = w^T and c (D + E) v = v entrywise.

    Only the interior of the truncation (indices up to K - 1) is compared; the
    last row and column are cut by the truncation itself.

    Raises:
        TruncationTooSmall: If K < 3
    """
    if K < 3:
        raise TruncationTooSmall(f"relation check needs K >= 3, got {K}")
    system = build_truncated_system(p, K)
    report = CheckReport(f"matrix product relations (K={K})")

    product = system.D @ system.E
    total = system.D + system.E
    algebra = report.new_check("DE = D + E", detail=f"entries (i, j) <= {K - 1}")
    for i in range(K - 1):
        for j in range(K - 1):
            algebra.record(product[i, j] == total[i, j], f"({i + 1},{j + 1})")

    w, v = system.w, system.v
    left = report.new_check("alpha w^T E = w^T", detail=f"k <= {K - 1}")
    for k in range(K - 1):
        left.record(p.alpha * (w[k] + w[k + 1]) == w[k], f"k={k + 1}")

    right = report.new_check("c (D + E) v = v", detail=f"k <= {K - 1}")
    for k in range(K - 1):
        below = v[k - 1] if k > 0 else 0
        right.record(p.c * (below + 2 * v[k] + v[k + 1]) == v[k], f"k={k + 1}")
    return report


def wv_closed(p: Params) -> Fraction:
    """
    Exact w^T v as a geometric sum.

    Raises:
        DivergentSeries: In the product regime, where the sum diverges
    """
    _require_summable(p)
    r = p.r
    if p.degenerate:
        return 1 / (1 - r) ** 2
    l1, l2 = p.lambda1, p.lambda2
    return (l1 / (1 - r * l1) - l2 / (1 - r * l2)) / (l1 - l2)


def wDv_closed(p: Params, pow: int) -> Fraction:
    """
    Closed form of w^T D^pow v for a non-degenerate spectrum.

    Raises:
        ValueError: If pow is negative
        DivergentSeries: In the product regime
        DegenerateSpectrum: If lambda1 == lambda2; use wDv_truncated instead
    """
    if pow < 0:
        raise ValueError("pow must be non-negative")
    _require_summable(p)
    if p.degenerate:
        raise DegenerateSpectrum("closed form needs lambda1 != lambda2 (c < 1/4)")
    a, l1, l2 = p.alpha, p.lambda1, p.lambda2
    ratio = ((1 + l2) / (1 + l1)) ** pow
    bracket = l1 / (a - l1 * (1 - a)) - ratio * l2 / (a - l2 * (1 - a))
    return (1 + l1) ** pow * (a / (l1 - l2)) * bracket


class _Row:
    """Row vector scale * w^T + head, head[k - 1] being the k-th component."""

    __slots__ = ("scale", "head")

    def __init__(self, scale: Fraction, head: List[Fraction]):
        self.scale = scale
        self.head = head


class _ExactEngine:
    """Exact row-vector sweeps for one parameter set."""

    def __init__(self, p: Params):
        self.params = p
        self.inv_alpha = 1 / p.alpha
        self.inv_beta = 1 / (1 - p.alpha)
        self.kick = p.alpha / (1 - p.alpha)
        self.wv = None if p.is_product else wv_closed(p)

    @staticmethod
    def boundary() -> _Row:
        return _Row(Fraction(1), [])

    def times_E(self, row: _Row) -> _Row:
        head = row.head
        new = [head[k] + head[k + 1] for k in range(len(head) - 1)]
        if head:
            new.append(head[-1])
        return _Row(row.scale * self.inv_alpha, new)

    def times_D(self, row: _Row) -> _Row:
        head = row.head
        new = list(head) + [Fraction(0)]
        for k in range(1, len(new)):
            new[k] += head[k - 1]
        new[0] -= row.scale * self.kick
        return _Row(row.scale * self.inv_beta, new)

    @staticmethod
    def add(first: _Row, second: _Row, factor: Fraction = Fraction(1)) -> _Row:
        """Return first + factor * second."""
        size = max(len(first.head), len(second.head))
        head = [Fraction(0)] * size
        for k, value in enumerate(first.head):
            head[k] += value
        for k, value in enumerate(second.head):
            head[k] += factor * value
        return _Row(first.scale + factor * second.scale, head)

    def _head_dot_v(self, row: _Row) -> Fraction:
        if not row.head:
            return Fraction(0)
        v = right_vector(self.params, len(row.head))
        return sum((h * vk for h, vk in zip(row.head, v)), Fraction(0))

    def ratio(self, row: _Row) -> Fraction:
        """Return (row . v) / (w^T v), exact in every regime."""
        if self.wv is None:
            # Only the w component survives the limit K -> infinity.
            return row.scale
        return row.scale + self._head_dot_v(row) / self.wv

    def raw(self, row: _Row) -> Fraction:
        """Return row . v; diverges in the product regime."""
        if self.wv is None:
            raise DivergentSeries("w^T v diverges in the product regime")
        return row.scale * self.wv + self._head_dot_v(row)


@lru_cache(maxsize=64)
def _engine(p: Params) -> _ExactEngine:
    return _ExactEngine(p)


def contraction(p: Params, a: int, b: int, normalized: bool = False) -> Fraction:
    """
    Exact w^T E^a D^b v, or its ratio to w^T v when normalized.

    Raises:
        DivergentSeries: For the unnormalised value in the product regime
    """
    if a < 0 or b < 0:
        raise ValueError("powers must be non-negative")
    engine = _engine(p)
    row = engine.boundary()
    for _ in range(a):
        row = engine.times_E(row)
    for _ in range(b):
        row = engine.times_D(row)
    return engine.ratio(row) if normalized else engine.raw(row)


def moment_power(p: Params, theta: float, n: int, normalized: bool = False) -> float:
    """
    Direct evaluation of w^T (e^theta D + E)^n v, exact up to the final rounding.

    Intended for small n; the rational intermediate values grow with n.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    engine = _engine(p)
    x = Fraction(math.exp(theta))
    row = engine.boundary()
    for _ in range(n):
        row = engine.add(engine.times_E(row), engine.times_D(row), x)
    return float(engine.ratio(row) if normalized else engine.raw(row))


def sweep_D(x: np.ndarray, sigma: float) -> np.ndarray:
    y = x.copy()
    y[1:] += sigma * x[:-1]
    return y


def sweep_E(x: np.ndarray, sigma: float) -> np.ndarray:
    y = x.copy()
    y[:-1] += x[1:] / sigma
    return y


def adaptive_truncation(
    evaluate: Callable[[int], np.ndarray],
    start: int,
    tol: float,
    relative: bool = True,
    what: str = "contraction",
) -> np.ndarray:
    """
    Double K from ``start`` until two successive evaluations agree within tol.

    Raises:
        NoConvergence: If K would exceed MAX_TRUNCATION
    """
    K = max(start, 2)
    previous = np.atleast_1d(evaluate(K))
    while 2 * K <= MAX_TRUNCATION:
        K *= 2
        current = np.atleast_1d(evaluate(K))
        change = float(np.max(np.abs(current - previous)))
        scale = float(np.max(np.abs(current))) if relative else 1.0
        if change <= tol * scale:
            _log.debug("%s stabilised at K=%d (change %.3g)", what, K, change)
            return current
        previous = current
    raise NoConvergence(
        f"{what} did not stabilise within tol={tol} up to K={MAX_TRUNCATION}"
    )


def _truncated_word(p: Params, eta: Configuration, K: int) -> float:
    w_hat, v_hat, sigma = balanced_vectors(p, K)
    x = w_hat.copy()
    log_scale = 0.0
    for bit in eta:
        x = sweep_D(x, sigma) if bit else sweep_E(x, sigma)
        norm = float(x.sum())
        x /= norm
        log_scale += math.log(norm)
    log_value = (
        len(eta) * math.log(p.c)
        + log_scale
        + math.log(float(x @ v_hat))
        - math.log(float(w_hat @ v_hat))
    )
    return math.exp(log_value)


def measure_prob(
    p: Params,
    eta: Union[str, Sequence[int]],
    tol: float = DEFAULT_TOL,
    exact: bool = True,
) -> Scalar:
    """
    Stationary probability of seeing ``eta`` on sites 1..n.

    Args:
        p: Model parameters
        eta: 0/1 word
        tol: Relative tolerance of the adaptive truncation (float mode)
        exact: Return an exact rational instead of a float

    Raises:
        NoConvergence: If the float truncation fails to stabilise
    """
    word = as_configuration(eta)
    if exact or p.is_product:
        engine = _engine(p)
        row = engine.boundary()
        for bit in word:
            row = engine.times_D(row) if bit else engine.times_E(row)
        value = p.c ** len(word) * engine.ratio(row)
        return value if exact else float(value)

    result = adaptive_truncation(
        lambda K: np.array([_truncated_word(p, word, K)]),
        start=len(word) + TRUNCATION_PADDING,
        tol=tol,
        what=f"P({format_configuration(word)})",
    )
    return float(result[0])


def configuration_probabilities(p: Params, n: int) -> Dict[Configuration, Fraction]:
    """Exact probabilities of all 2^n words of length n, sharing prefixes."""
    if n < 0:
        raise ValueError("n must be non-negative")
    engine = _engine(p)
    cn = p.c**n
    result: Dict[Configuration, Fraction] = {}
    stack: List[Tuple[Configuration, _Row]] = [((), engine.boundary())]
    while stack:
        word, row = stack.pop()
        if len(word) == n:
            result[word] = cn * engine.ratio(row)
            continue
        stack.append((word + (1,), engine.times_D(row)))
        stack.append((word + (0,), engine.times_E(row)))
    return dict(sorted(result.items()))


@dataclass(frozen=True)
class DensityDistribution:
    """Law of the number of particles m among the first n sites."""

    n: int
    probs: Tuple[Scalar, ...]
    exact: bool = True

    def total(self) -> Scalar:
        return sum(self.probs, Fraction(0) if self.exact else 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.probs])

    def mean_density(self) -> float:
        m = np.arange(self.n + 1)
        return float(m @ self.as_array()) / self.n


def _truncated_density(p: Params, n: int, K: int) -> np.ndarray:
    w_hat, v_hat, sigma = balanced_vectors(p, K)
    rows = np.zeros((n + 1, K))
    rows[0] = w_hat
    log_scale = 0.0
    for _ in range(n):
        moved_d = rows.copy()
        moved_d[:, 1:] += sigma * rows[:, :-1]
        moved_e = rows.copy()
        moved_e[:, :-1] += rows[:, 1:] / sigma
        moved_e[1:] += moved_d[:-1]
        rows = moved_e
        norm = float(rows.sum())
        rows /= norm
        log_scale += math.log(norm)
    prefactor = math.exp(
        n * math.log(p.c) + log_scale - math.log(float(w_hat @ v_hat))
    )
    result: np.ndarray = prefactor * (rows @ v_hat)
    return result


def block_density_distribution(
    p: Params, n: int, tol: float = DEFAULT_TOL, exact: bool = True
) -> DensityDistribution:
    """
    Distribution of n Z_n, the particle count on sites 1..n.

    Row vectors u_{k,m} obey u_{k,m} = u_{k-1,m} E + u_{k-1,m-1} D, and
    p_m = c^n (u_{n,m} . v) / (w^T v).

    Raises:
        ValueError: If n < 1
        NoConvergence: If the float truncation fails to stabilise
    """
    if n < 1:
        raise ValueError("block length n must be >= 1")
    if exact or p.is_product:
        engine = _engine(p)
        rows = [engine.boundary()]
        for k in range(n):
            new_rows = []
            for m in range(k + 2):
                if m == 0:
                    new_rows.append(engine.times_E(rows[0]))
                elif m == k + 1:
                    new_rows.append(engine.times_D(rows[k]))
                else:
                    new_rows.append(
                        engine.add(engine.times_E(rows[m]), engine.times_D(rows[m - 1]))
                    )
            rows = new_rows
        cn = p.c**n
        probs = tuple(cn * engine.ratio(row) for row in rows)
        if exact:
            return DensityDistribution(n=n, probs=probs, exact=True)
        return DensityDistribution(
            n=n, probs=tuple(float(x) for x in probs), exact=False
        )

    result = adaptive_truncation(
        lambda K: _truncated_density(p, n, K),
        start=n + TRUNCATION_PADDING,
        tol=tol,
        relative=False,
        what=f"block density n={n}",
    )
    return DensityDistribution(
        n=n, probs=tuple(float(x) for x in result), exact=False
    )


def liggett_relations_check(p: Params, n: int) -> CheckReport:
    """
    Check the two relations that characterise the stationary measure.

    (c) a pair 1 0 at positions u, u+1 contracts to one free site:
        P(X 1 0 Y) = c [P(X 0 Y) + P(X 1 Y)];
    (d) an empty first site: alpha P(0 Y) = c P(Y).

    Raises:
        ValueError: If n < 3
    """
    if n < 3:
        raise ValueError("Liggett relations are checked for n >= 3")
    probs = configuration_probabilities(p, n)
    shorter = configuration_probabilities(p, n - 1)
    report = CheckReport(f"Liggett relations (n={n})")
    pair = report.new_check("(c) P(X10Y) = c [P(X0Y) + P(X1Y)]")
    boundary = report.new_check("(d) alpha P(0Y) = c P(Y)")

    for eta, prob in probs.items():
        label = format_configuration(eta)
        if eta[0] == 0:
            boundary.record(p.alpha * prob == p.c * shorter[eta[1:]], label)
        for u in range(n - 1):
            if eta[u] == 1 and eta[u + 1] == 0:
                head, tail = eta[:u], eta[u + 2 :]
                free = shorter[head + (0,) + tail] + shorter[head + (1,) + tail]
                pair.record(prob == p.c * free, f"{label} u={u + 1}")
    return report


def wDv_truncated(p: Params, pow: int, K: int, exact: bool = False) -> Scalar:
    """
    w^T D^pow v from explicit K-dimensional truncations.

    Raises:
        TruncationTooSmall: If K < 2
        DivergentSeries: For the float path in the product regime
    """
    if pow < 0:
        raise ValueError("pow must be non-negative")
    if K < 2:
        raise TruncationTooSmall(f"truncation dimension must be >= 2, got {K}")
    if exact:
        x = list(left_vector(p, K))
        for _ in range(pow):
            x = [x[k] + (x[k - 1] if k > 0 else 0) for k in range(K)]
        v = right_vector(p, K)
        return sum((xk * vk for xk, vk in zip(x, v)), Fraction(0))

    w_hat, v_hat, sigma = balanced_vectors(p, K)
    y = w_hat.copy()
    log_scale = 0.0
    for _ in range(pow):
        y = sweep_D(y, sigma)
        norm = float(y.sum())
        y /= norm
        log_scale += math.log(norm)
    return math.exp(log_scale + math.log(float(y @ v_hat)))


__all__ = [
    "DEFAULT_TOL",
    "TRUNCATION_PADDING",
    "MAX_TRUNCATION",
    "Configuration",
    "as_configuration",
    "format_configuration",
    "left_vector",
    "right_vector",
    "balanced_vectors",
    "TruncatedSystem",
    "build_truncated_system",
    "verify_mpa_relations",
    "wv_closed",
    "wDv_closed",
    "wDv_truncated",
    "contraction",
    "moment_power",
    "adaptive_truncation",
    "measure_prob",
    "configuration_probabilities",
    "DensityDistribution",
    "block_density_distribution",
    "liggett_relations_check",
]
