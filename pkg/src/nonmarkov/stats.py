"""Seeded random streams and percentile-bootstrap confidence intervals.

Streams are derived from a master seed and an integer stream id through
numpy's SeedSequence hashing, so every Monte Carlo sample is reproducible
independent of execution order and worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# Stream ids at or above this value are reserved for internal consumers
# (bootstrap resampling, disorder draws); per-pair streams count up from 0.
RESERVED_STREAM_BASE = 1 << 48
BOOTSTRAP_STREAM = RESERVED_STREAM_BASE
DISORDER_STREAM = RESERVED_STREAM_BASE + 1


@dataclass(frozen=True)
class RngSpec:
    """A reproducible random stream: master seed plus stream id."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < (1 << 64):
            raise ValueError("master_seed must fit in 64 bits")
        if self.stream_id < 0:
            raise ValueError("stream_id must be >= 0")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(seq)


def derive_seed(master_seed: int, *path: int) -> int:
    """Stable 64-bit sub-seed for a labeled branch of a master seed."""
    seq = np.random.SeedSequence(entropy=[master_seed, *path])
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ConfidenceInterval:
    """Percentile-bootstrap interval for a scalar statistic."""

    lower: float
    upper: float
    level: float = 0.90
    n_resamples: int = 2000

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0, 1)")
        if self.lower > self.upper + 1e-15:
            raise ValueError(f"interval bounds out of order: [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def bootstrap_ci(
    samples: np.ndarray,
    statistic: Callable[[np.ndarray], float],
    level: float = 0.90,
    n_resamples: int = 2000,
    rng: np.random.Generator | None = None,
) -> ConfidenceInterval:
    """Percentile bootstrap: resample rows with replacement, apply the
    statistic, and take the symmetric empirical quantiles.

    `samples` may be a vector of scalars or an array whose leading axis
    indexes independent samples (e.g. per-pair flux vectors).
    """
    samples = np.asarray(samples)
    n = samples.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 samples to bootstrap, got {n}")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    if rng is None:
        rng = np.random.default_rng()
    idx = rng.integers(0, n, size=(n_resamples, n))
    values = np.array([statistic(samples[row]) for row in idx], dtype=np.float64)
    alpha = 0.5 * (1.0 - level)
    lower, upper = np.quantile(values, [alpha, 1.0 - alpha])
    return ConfidenceInterval(float(lower), float(upper), level, n_resamples)
