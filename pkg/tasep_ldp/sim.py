"""
Kinetic Monte Carlo simulation of the open-boundary TASEP.

Particles enter site 1 at rate alpha, hop right at rate 1 onto empty sites and
leave site L at rate beta. With beta = min(1 - rho, 1/2) the left edge of a
long lattice approximates the semi-infinite stationary measure, so block
statistics near site 1 can be compared with the exact matrix product values.

Events are drawn rejection-free: the set of active bonds (a particle followed
by a hole) is maintained incrementally, so each event costs O(1).
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import logger
from .params import HALF, Params

_log = logger.getChild("sim")

RANDOM_CHUNK = 1 << 16
CURRENT_BATCHES = 20


class InitialCondition(Enum):
    EMPTY = "Empty"
    PRODUCT_RHO = "ProductRho"
    PRODUCT_STATIONARY = "ProductStationary"


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines one simulated chain."""

    params: Params
    L: int
    beta: float
    seed: int
    burn_in: float
    samples: int
    sample_gap: float = 1.0
    init: InitialCondition = InitialCondition.PRODUCT_STATIONARY
    spawn_key: Tuple[int, ...] = ()
    check_exclusion: bool = False

    def __post_init__(self) -> None:
        if self.L < 1:
            raise ValueError(f"lattice length must be >= 1, got {self.L}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.burn_in < 0 or self.samples < 0:
            raise ValueError("burn_in and samples must be non-negative")
        if not self.sample_gap > 0:
            raise ValueError("sample_gap must be positive")

    @classmethod
    def for_params(
        cls,
        params: Params,
        n: int,
        seed: int = 0,
        samples: int = 100_000,
        L: Optional[int] = None,
        beta: Optional[float] = None,
        burn_in: Optional[float] = None,
        **kwargs: object,
    ) -> "SimConfig":
        """
        Fill in the default boundary and sizes for block length n.

        beta = min(1 - rho, 1/2), L = max(400, 50 n), burn_in = 20 L.
        """
        size = L if L is not None else max(400, 50 * n)
        return cls(
            params=params,
            L=size,
            beta=beta if beta is not None else float(min(1 - params.rho, HALF)),
            seed=seed,
            burn_in=burn_in if burn_in is not None else 20.0 * size,
            samples=samples,
            **kwargs,  # type: ignore[arg-type]
        )

    def validate_block(self, n: int) -> None:
        if n < 1:
            raise ValueError("block length must be >= 1")
        if 8 * n > self.L:
            raise ValueError(f"block length {n} exceeds L/8 for L={self.L}")

    def replica(self, index: int) -> "SimConfig":
        """Configuration of an independent replica with its own stream."""
        return replace(self, spawn_key=self.spawn_key + (index,))

    def make_rng(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        return np.random.Generator(np.random.Philox(sequence))


@dataclass
class SimState:
    """Occupation array, clock and random stream of one chain."""

    occ: bytearray
    time: float
    rng: np.random.Generator
    active: List[int] = field(default_factory=list)
    where: List[int] = field(default_factory=list)
    bond_hops: int = 0
    events: int = 0
    _exp: List[float] = field(default_factory=list, repr=False)
    _exp_pos: int = 0
    _uni: List[float] = field(default_factory=list, repr=False)
    _uni_pos: int = 0

    @property
    def L(self) -> int:
        return len(self.occ)

    def density(self, n: int) -> float:
        return sum(self.occ[:n]) / n

    def rebuild_bonds(self) -> None:
        """Recompute the active bond list from the occupation array."""
        L = self.L
        self.where = [-1] * max(L - 1, 0)
        self.active = []
        for i in range(L - 1):
            if self.occ[i] and not self.occ[i + 1]:
                self.where[i] = len(self.active)
                self.active.append(i)


def init_chain(cfg: SimConfig) -> SimState:
    """Initial occupation per ``cfg.init`` with a freshly seeded stream."""
    rng = cfg.make_rng()
    p = cfg.params
    if cfg.init is InitialCondition.EMPTY:
        occ = bytearray(cfg.L)
    else:
        if cfg.init is InitialCondition.PRODUCT_RHO:
            density = float(p.rho)
        elif p.alpha > HALF:
            density = float(max(p.rho, HALF))
        else:
            density = float(p.alpha)
        occ = bytearray((rng.random(cfg.L) < density).astype(np.uint8).tobytes())
    state = SimState(occ=occ, time=0.0, rng=rng)
    state.rebuild_bonds()
    return state


def advance(state: SimState, cfg: SimConfig, t: float) -> SimState:
    """
    Run the chain for t time units (in place) and return the state.

    The last exponential clock is cut at the target time; by memorylessness a
    fresh clock is drawn on the next call.
    """
    if t < 0:
        raise ValueError("elapsed time must be non-negative")
    if t == 0:
        return state

    alpha = float(cfg.params.alpha)
    beta = cfg.beta
    check = cfg.check_exclusion
    occ = state.occ
    active = state.active
    where = state.where
    L = len(occ)
    last = L - 1
    rng = state.rng
    exp_buf, exp_pos = state._exp, state._exp_pos
    uni_buf, uni_pos = state._uni, state._uni_pos
    now = state.time
    t_end = now + t
    hops = state.bond_hops
    events = state.events

    def refresh(i: int) -> None:
        if 0 <= i < last:
            if occ[i] and not occ[i + 1]:
                if where[i] < 0:
                    where[i] = len(active)
                    active.append(i)
            elif where[i] >= 0:
                k = where[i]
                moved = active.pop()
                if moved != i:
                    active[k] = moved
                    where[moved] = k
                where[i] = -1

    while True:
        rate_in = alpha if not occ[0] else 0.0
        rate_out = beta if occ[last] else 0.0
        n_active = len(active)
        total = rate_in + n_active + rate_out

        if exp_pos >= len(exp_buf):
            exp_buf = rng.standard_exponential(RANDOM_CHUNK).tolist()
            exp_pos = 0
        dt = exp_buf[exp_pos] / total
        exp_pos += 1
        if now + dt > t_end:
            now = t_end
            break
        now += dt

        if uni_pos >= len(uni_buf):
            uni_buf = rng.random(RANDOM_CHUNK).tolist()
            uni_pos = 0
        u = uni_buf[uni_pos] * total
        uni_pos += 1
        events += 1

        if u < rate_in:
            if check and occ[0]:
                raise RuntimeError("injection onto an occupied site")
            occ[0] = 1
            refresh(0)
        elif u < rate_in + n_active:
            i = active[min(int(u - rate_in), n_active - 1)]
            if check and not (occ[i] and not occ[i + 1]):
                raise RuntimeError(f"illegal hop across bond {i + 1}")
            occ[i] = 0
            occ[i + 1] = 1
            if i == 0:
                hops += 1
            refresh(i)
            refresh(i - 1)
            refresh(i + 1)
        else:
            if check and not occ[last]:
                raise RuntimeError("exit from an empty site")
            occ[last] = 0
            refresh(last - 1)

    state._exp, state._exp_pos = exp_buf, exp_pos
    state._uni, state._uni_pos = uni_buf, uni_pos
    state.time = now
    state.bond_hops = hops
    state.events = events
    return state


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Histogram of n Z_n with the current across bond (1,2)."""

    n: int
    counts: Tuple[int, ...]
    total: int
    current_estimate: float
    current_stderr: float

    def frequencies(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / max(self.total, 1)

    def tv_distance(self, probs: Sequence[float]) -> float:
        """Total-variation distance to a reference law on m = 0..n."""
        reference = np.asarray([float(x) for x in probs])
        return 0.5 * float(np.abs(self.frequencies() - reference).sum())

    def to_dict(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "counts": list(self.counts),
            "total": self.total,
            "current_estimate": self.current_estimate,
            "current_stderr": self.current_stderr,
        }


def merge_distributions(
    parts: Sequence[EmpiricalDistribution],
) -> EmpiricalDistribution:
    """Pool equally sized replicas in the given order."""
    if not parts:
        raise ValueError("nothing to merge")
    n = parts[0].n
    counts = [sum(part.counts[m] for part in parts) for m in range(n + 1)]
    size = len(parts)
    current = sum(part.current_estimate for part in parts) / size
    stderr = math.sqrt(sum(part.current_stderr**2 for part in parts)) / size
    return EmpiricalDistribution(
        n=n,
        counts=tuple(counts),
        total=sum(part.total for part in parts),
        current_estimate=current,
        current_stderr=stderr,
    )


def _current_statistics(increments: List[int], gap: float) -> Tuple[float, float]:
    if not increments:
        return math.nan, math.nan
    values = np.asarray(increments, dtype=float)
    estimate = float(values.sum()) / (len(values) * gap)
    batches = min(CURRENT_BATCHES, len(values))
    if batches < 2:
        return estimate, math.nan
    means = [float(chunk.mean()) / gap for chunk in np.array_split(values, batches)]
    return estimate, float(np.std(means, ddof=1)) / math.sqrt(batches)


def sample_block_densities(
    cfg: SimConfig, ns: Sequence[int]
) -> Dict[int, EmpiricalDistribution]:
    """
    One chain, several block lengths recorded at the same sampling times.

    Raises:
        ValueError: If ns is empty or a block exceeds L/8
    """
    if not ns:
        raise ValueError("need at least one block length")
    for n in ns:
        cfg.validate_block(n)
    state = init_chain(cfg)
    advance(state, cfg, cfg.burn_in)
    _log.info(
        "burn-in of %g time units done (%d events, L=%d)",
        cfg.burn_in,
        state.events,
        cfg.L,
    )

    counts = {n: [0] * (n + 1) for n in ns}
    increments: List[int] = []
    longest = max(ns)
    for _ in range(cfg.samples):
        before = state.bond_hops
        advance(state, cfg, cfg.sample_gap)
        increments.append(state.bond_hops - before)
        prefix = state.occ[:longest]
        for n in ns:
            counts[n][sum(prefix[:n])] += 1

    estimate, stderr = _current_statistics(increments, cfg.sample_gap)
    _log.info("sampled %d configurations, current %.5f", cfg.samples, estimate)
    return {
        n: EmpiricalDistribution(
            n=n,
            counts=tuple(counts[n]),
            total=cfg.samples,
            current_estimate=estimate,
            current_stderr=stderr,
        )
        for n in ns
    }


def sample_block_density(cfg: SimConfig, n: int) -> EmpiricalDistribution:
    """
    Histogram of n Z_n sampled every ``sample_gap`` after the burn-in.

    Raises:
        ValueError: If n exceeds L/8
    """
    return sample_block_densities(cfg, [n])[n]


def _replica_task(cfg: SimConfig, n: int) -> EmpiricalDistribution:
    return sample_block_density(cfg, n)


def run_replicas(
    cfg: SimConfig, n: int, replicas: int, workers: Optional[int] = None
) -> EmpiricalDistribution:
    """
    Run independent replicas, each on its own spawned stream, and pool them.

    The pooled result depends only on cfg and the replica count, never on
    the number of workers.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    configs = [cfg.replica(index) for index in range(replicas)]
    if workers == 1 or replicas == 1:
        parts = [_replica_task(c, n) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_replica_task, configs, [n] * replicas))
    return merge_distributions(parts)


@dataclass(frozen=True)
class RateCurveRow:
    n: int
    bin_index: int
    z_low: float
    z_high: float
    count: int
    estimate: Optional[float]


@dataclass(frozen=True)
class RateCurve:
    """Empirical -(1/n) log P(Z_n in bin) for several block lengths."""

    z_bins: int
    rows: Tuple[RateCurveRow, ...]

    def for_n(self, n: int) -> List[RateCurveRow]:
        return [row for row in self.rows if row.n == n]

    def minimum(self, n: int) -> float:
        """Smallest estimate over the bins observed at block length n."""
        values = [row.estimate for row in self.for_n(n) if row.estimate is not None]
        return min(values)


def bin_counts(dist: EmpiricalDistribution, z_bins: int) -> List[int]:
    """Fold the histogram over m into z_bins equal bins of [0, 1]."""
    counts = [0] * z_bins
    for m, count in enumerate(dist.counts):
        counts[min(m * z_bins // dist.n, z_bins - 1)] += count
    return counts


def curve_from_distributions(
    dists: Dict[int, EmpiricalDistribution], z_bins: int
) -> RateCurve:
    rows = []
    for n in sorted(dists):
        dist = dists[n]
        for index, count in enumerate(bin_counts(dist, z_bins)):
            estimate = -math.log(count / dist.total) / n if count > 0 else None
            rows.append(
                RateCurveRow(
                    n=n,
                    bin_index=index,
                    z_low=index / z_bins,
                    z_high=(index + 1) / z_bins,
                    count=count,
                    estimate=estimate,
                )
            )
    return RateCurve(z_bins=z_bins, rows=tuple(rows))


def empirical_rate_curve(cfg: SimConfig, ns: Sequence[int], z_bins: int) -> RateCurve:
    """
    Empirical rate curve -(1/n) log P(Z_n in bin); empty bins are left out.

    Raises:
        ValueError: If ns is empty, not increasing or a block exceeds L/8
    """
    if not ns:
        raise ValueError("need at least one block length")
    if z_bins < 1:
        raise ValueError("z_bins must be >= 1")
    if list(ns) != sorted(set(ns)):
        raise ValueError("block lengths must be strictly increasing")
    return curve_from_distributions(sample_block_densities(cfg, ns), z_bins)


__all__ = [
    "InitialCondition",
    "SimConfig",
    "SimState",
    "init_chain",
    "advance",
    "EmpiricalDistribution",
    "merge_distributions",
    "sample_block_densities",
    "sample_block_density",
    "run_replicas",
    "RateCurveRow",
    "RateCurve",
    "bin_counts",
    "curve_from_distributions",
    "empirical_rate_curve",
]
