"""MZipf request popularity: probability mass, harmonic sums, seeded sampling.

The request distribution over a library of M files is
P(f) = (f + q)^(-gamma) / H(1, M), where H(a, b) = sum_{f=a}^{b} (f+q)^(-gamma).
q = 0 reduces to a plain Zipf law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class PopularityModel:
    """Library popularity law.

    M      -- library size (number of files, indexed 1..M)
    gamma  -- Zipf factor (>= 0)
    q      -- plateau factor (>= 0); flattens the head of the distribution
    """

    M: int
    gamma: float
    q: float = 0.0

    def __post_init__(self):
        if not isinstance(self.M, (int, np.integer)) or self.M < 1:
            raise ValueError(f"library size M must be a positive integer, got {self.M!r}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.q < 0:
            raise ValueError(f"q must be non-negative, got {self.q}")

    @cached_property
    def _weights(self) -> np.ndarray:
        # exp(-gamma*log(f+q)) stays finite where (f+q)**-gamma would underflow first
        f = np.arange(1, self.M + 1, dtype=np.float64)
        return np.exp(-self.gamma * np.log(f + self.q))

    @cached_property
    def _norm(self) -> float:
        return math.fsum(self._weights)

    @cached_property
    def pmf_table(self) -> np.ndarray:
        """Full probability vector over files 1..M (index 0 is file 1)."""
        t = self._weights / self._norm
        t.setflags(write=False)
        return t

    @cached_property
    def _cdf(self) -> np.ndarray:
        c = np.cumsum(self.pmf_table)
        c[-1] = 1.0
        c.setflags(write=False)
        return c


def harmonic_sum(a: int, b: int, model: PopularityModel) -> float:
    """Sum of (f+q)^(-gamma) for f in a..b (inclusive), compensated summation."""
    if a < 1:
        raise ValueError(f"harmonic_sum lower limit must be >= 1, got {a}")
    if a > b:
        raise ValueError(f"harmonic_sum called on empty range a={a} > b={b}")
    if b > model.M:
        raise ValueError(f"harmonic_sum upper limit {b} exceeds library size {model.M}")
    return math.fsum(model._weights[a - 1 : b])


def pmf(f: int, model: PopularityModel) -> float:
    """Request probability of file f (1-based)."""
    if f < 1 or f > model.M:
        raise ValueError(f"file index {f} outside library 1..{model.M}")
    return float(model.pmf_table[f - 1])


def sample_request(model: PopularityModel, rng: np.random.Generator, size: int | None = None):
    """Draw file indices from the popularity law by inverse CDF.

    Deterministic given the generator state: each draw consumes exactly one
    uniform. Returns a scalar int when size is None, else an int64 array.
    """
    u = rng.random(size if size is not None else 1)
    idx = np.searchsorted(model._cdf, u, side="right") + 1
    idx = np.minimum(idx, model.M)
    if size is None:
        return int(idx[0])
    return idx.astype(np.int64)
