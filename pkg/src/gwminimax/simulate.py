"""Monte Carlo sampling of truncated minimax trees.

Each sample owns a counter-based RNG stream keyed by (seed, sample index),
so the stream a sample sees never depends on batch size, chunking, or
thread count. Within a sample the tree is generated level by level and
reduced bottom-up with vectorized min/max, consuming randomness in a fixed
order: offspring counts for level 0, 1, ..., then leaf draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np

from .distributions import OffspringDistribution
from .errors import BudgetExceededError

DEFAULT_NODE_BUDGET = 10**8

# 99% two-sided Kolmogorov quantile
KS_99 = 1.63


@dataclass(frozen=True)
class Uniform01:
    """Leaves are independent uniforms on [0, 1]."""


@dataclass(frozen=True)
class Bernoulli:
    """Leaves are independent indicators with success probability 1 - x."""

    x: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"x must lie in [0, 1], got {self.x}")


@dataclass(frozen=True)
class BivariateBernoulli:
    """Leaves are independent pairs of independent Bernoulli(1 - x) marks."""

    x: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"x must lie in [0, 1], got {self.x}")


Boundary = Union[Uniform01, Bernoulli, BivariateBernoulli]


@dataclass(frozen=True)
class SimConfig:
    dist: OffspringDistribution
    depth: int
    boundary: Boundary = field(default_factory=Uniform01)
    samples: int = 1
    seed: int = 0
    node_budget: int = DEFAULT_NODE_BUDGET

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.node_budget < max(self.depth, 1):
            raise ValueError("node_budget must cover at least one node per level")

    def as_dict(self) -> dict:
        return {
            "dist": self.dist.spec_string(),
            "depth": self.depth,
            "boundary": _boundary_tag(self.boundary),
            "samples": self.samples,
            "seed": self.seed,
            "node_budget": self.node_budget,
        }


def _boundary_tag(boundary: Boundary) -> str:
    if isinstance(boundary, Uniform01):
        return "uniform"
    if isinstance(boundary, Bernoulli):
        return f"bernoulli:{boundary.x!r}"
    return f"bivariate:{boundary.x!r}"


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), index]))


class _Discard(Exception):
    """Internal: this tree went over budget, drop the sample."""


def _grow_counts(config: SimConfig, rng: np.random.Generator) -> list[np.ndarray]:
    """Offspring counts per level; raises _Discard on budget violation."""
    sampler = config.dist.offspring_sampler()
    level_counts: list[np.ndarray] = []
    width = 1
    total = 1
    for _ in range(config.depth):
        # every node has at least one child, so the next level alone
        # would blow the budget if width already fills it
        if total + width > config.node_budget:
            raise _Discard
        kids = sampler.draw(rng.random(width))
        level_counts.append(kids)
        width = int(kids.sum())
        total += width
        if total > config.node_budget:
            raise _Discard
    return level_counts


def _leaf_values(boundary: Boundary, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(boundary, Uniform01):
        return rng.random(n)
    if isinstance(boundary, Bernoulli):
        return (rng.random(n) > boundary.x).astype(float)
    u_first = rng.random(n)
    u_second = rng.random(n)
    x = boundary.x
    return np.stack([(u_first > x), (u_second > x)]).astype(float)


def _reduce_tree(level_counts: list[np.ndarray], leaves: np.ndarray, depth: int) -> np.ndarray:
    values = leaves
    for level in range(depth - 1, -1, -1):
        kids = level_counts[level]
        starts = np.zeros(len(kids), dtype=np.intp)
        np.cumsum(kids[:-1], out=starts[1:])
        op = np.minimum if (depth - level) % 2 == 0 else np.maximum
        values = op.reduceat(values, starts, axis=-1)
    return values


def _one_sample(config: SimConfig, index: int) -> np.ndarray:
    rng = _stream(config.seed, index)
    level_counts = _grow_counts(config, rng)
    n_leaves = int(level_counts[-1].sum()) if level_counts else 1
    leaves = _leaf_values(config.boundary, n_leaves, rng)
    root = _reduce_tree(level_counts, leaves, config.depth)
    return root[..., 0]


def sample_root(config: SimConfig) -> float:
    """One root value for an even depth (the root is a min level)."""
    if config.depth % 2 != 0:
        raise ValueError("sample_root wants an even depth; use sample_root_odd")
    if isinstance(config.boundary, BivariateBernoulli):
        raise ValueError("use sample_bivariate_root for a bivariate boundary")
    try:
        return float(_one_sample(config, 0))
    except _Discard:
        raise BudgetExceededError(config.node_budget) from None


def sample_root_odd(config: SimConfig) -> float:
    """One root value for an odd depth (the root is a max level)."""
    if config.depth % 2 != 1:
        raise ValueError("sample_root_odd wants an odd depth")
    if isinstance(config.boundary, BivariateBernoulli):
        raise ValueError("use sample_bivariate_root for a bivariate boundary")
    try:
        return float(_one_sample(config, 0))
    except _Discard:
        raise BudgetExceededError(config.node_budget) from None


def sample_bivariate_root(config: SimConfig) -> tuple[float, float]:
    """Coordinate-wise minimax pair driven by one shared tree realization."""
    if not isinstance(config.boundary, BivariateBernoulli):
        raise ValueError("sample_bivariate_root needs a BivariateBernoulli boundary")
    try:
        pair = _one_sample(config, 0)
    except _Discard:
        raise BudgetExceededError(config.node_budget) from None
    return float(pair[0]), float(pair[1])


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    values: np.ndarray
    discarded: int

    @property
    def attempted(self) -> int:
        return len(self.values) + self.discarded

    @property
    def acceptance_rate(self) -> float:
        return len(self.values) / self.attempted if self.attempted else 0.0


def run_samples(config: SimConfig) -> SimResult:
    """Draw config.samples roots; over-budget trees are dropped and counted."""
    bivariate = isinstance(config.boundary, BivariateBernoulli)
    kept: list[np.ndarray | float] = []
    discarded = 0
    for index in range(config.samples):
        try:
            kept.append(_one_sample(config, index))
        except _Discard:
            discarded += 1
    if bivariate:
        values = (
            np.array(kept) if kept else np.empty((0, 2), dtype=float)
        )
    else:
        values = np.asarray(kept, dtype=float)
    return SimResult(config=config, values=values, discarded=discarded)


class EmpiricalCDF:
    """Right-continuous step CDF of a sample."""

    def __init__(self, samples: np.ndarray) -> None:
        data = np.sort(np.asarray(samples, dtype=float))
        if data.ndim != 1 or len(data) == 0:
            raise ValueError("need a nonempty 1-d sample")
        self.samples = data

    def __len__(self) -> int:
        return len(self.samples)

    def __call__(self, x):
        return np.searchsorted(self.samples, x, side="right") / len(self.samples)


def ks_statistic(empirical: EmpiricalCDF, analytic: Callable) -> float:
    """Sup distance between a sample and a target CDF, over sample points."""
    n = len(empirical)
    if n < 100:
        raise ValueError("KS comparison wants at least 100 samples")
    target = np.asarray(analytic(empirical.samples), dtype=float)
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(np.max(np.maximum(hi - target, target - lo)))


def ks_two_sample(first: np.ndarray, second: np.ndarray) -> float:
    a = np.sort(np.asarray(first, dtype=float))
    b = np.sort(np.asarray(second, dtype=float))
    support = np.concatenate([a, b])
    fa = np.searchsorted(a, support, side="right") / len(a)
    fb = np.searchsorted(b, support, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def ks_threshold(n: int) -> float:
    """99% one-sample bound."""
    return KS_99 / np.sqrt(n)


def ks_two_sample_threshold(n: int, m: int) -> float:
    """99% two-sample bound."""
    return KS_99 * np.sqrt((n + m) / (n * m))


def ks_gate(config: SimConfig, analytic: Callable, retry_seed: int) -> tuple[bool, float, float | None]:
    """One-sample KS with the two-seed retry policy.

    Returns (passed, first statistic, second statistic or None). The check
    fails only when two independent seeds both land above the 99% bound.
    """
    first = run_samples(config)
    d1 = ks_statistic(EmpiricalCDF(first.values), analytic)
    bound = ks_threshold(len(first.values))
    if d1 <= bound:
        return True, d1, None
    second = run_samples(replace(config, seed=retry_seed))
    d2 = ks_statistic(EmpiricalCDF(second.values), analytic)
    return d2 <= ks_threshold(len(second.values)), d1, d2
