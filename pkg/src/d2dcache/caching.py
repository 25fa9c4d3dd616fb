"""Decentralized random caching.

Each user independently caches exactly S distinct files so that file f is
included with a prescribed marginal probability Pc(f), sum_f Pc(f) = S.
The policy used throughout minimizes the cluster outage objective

    sum_f P(f) * exp(-g_c * Pc(f))

over 0 <= Pc <= 1, sum Pc = S, where g_c is the mean number of users per
cluster. The minimizer is a water-filling profile found by bisection on the
KKT multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .popularity import PopularityModel

SUM_TOL = 1e-9
_MU_REL_TOL = 1e-12
_MAX_BISECT = 200
_MAX_SPLIT_RETRIES = 1000


@dataclass(frozen=True)
class CachingPolicy:
    """Per-file caching probabilities with a total-budget constraint."""

    probs: np.ndarray
    cache_size: int

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1:
            raise ValueError("probs must be a 1-d sequence")
        if self.cache_size < 0:
            raise ValueError(f"cache_size must be >= 0, got {self.cache_size}")
        if len(p) < self.cache_size:
            raise ValueError(
                f"infeasible policy: cache_size {self.cache_size} exceeds library size {len(p)}"
            )
        if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-12):
            raise ValueError("caching probabilities must lie in [0, 1]")
        if abs(float(p.sum()) - self.cache_size) > SUM_TOL:
            raise ValueError(
                f"caching probabilities sum to {p.sum():.12g}, expected {self.cache_size}"
            )
        p = np.clip(p, 0.0, 1.0)  # keep interval lengths <= 1 for exact-S placement
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def M(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class CacheSet:
    """Concrete cache contents of one user.

    In split mode slot2 is non-empty and the two subsets are disjoint,
    S/2 files each; otherwise slot1 holds all S files.
    """

    slot1: frozenset
    slot2: frozenset = frozenset()

    @property
    def files(self) -> frozenset:
        return self.slot1 | self.slot2


@dataclass(frozen=True)
class SplitCachingPolicy:
    """Two sub-policies of size S/2 each, used by the double time-slot scheme.

    gc1/gc2 are the mean cluster occupancies the two sub-policies were
    optimized for (slot-2 clusters are smaller, so gc2 <= gc1).
    """

    policy_slot1: CachingPolicy
    policy_slot2: CachingPolicy
    gc1: float
    gc2: float

    def __post_init__(self):
        if self.policy_slot1.cache_size != self.policy_slot2.cache_size:
            raise ValueError("split sub-policies must have equal cache sizes")
        if self.gc2 > self.gc1:
            raise ValueError(f"expected gc2 <= gc1, got gc1={self.gc1} gc2={self.gc2}")

    @property
    def cache_size(self) -> int:
        return 2 * self.policy_slot1.cache_size


def _waterfill_probs(prob_mass: np.ndarray, S: int, g_c: float) -> np.ndarray:
    """Minimize sum p*exp(-g_c*Pc) s.t. sum Pc = S, 0 <= Pc <= 1.

    KKT: Pc(f) = clip(ln(g_c*p_f/mu)/g_c, 0, 1); mu found by bisection on
    ln(mu). The budget sum is continuous and non-increasing in mu.
    """
    with np.errstate(divide="ignore"):
        log_gp = np.log(g_c) + np.log(prob_mass)
    finite = log_gp[np.isfinite(log_gp)]  # underflowed tail mass stays at Pc = 0
    lo = float(finite.min()) - g_c  # every finite-mass file saturated -> sum >= S
    hi = float(finite.max())        # every file at zero -> sum = 0 <= S
    pc = np.empty_like(prob_mass)
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        np.clip((log_gp - mid) / g_c, 0.0, 1.0, out=pc)
        total = float(pc.sum())
        if abs(total - S) <= 0.1 * SUM_TOL:
            break
        if total > S:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _MU_REL_TOL * max(1.0, abs(hi)):
            break
    # close the residual budget gap on the unsaturated coordinates
    residual = S - float(pc.sum())
    if residual != 0.0:
        free = (pc > 0.0) & (pc < 1.0)
        if not free.any():
            free = pc < 1.0 if residual > 0 else pc > 0.0
        n_free = int(free.sum())
        if n_free:
            pc[free] += residual / n_free
            np.clip(pc, 0.0, 1.0, out=pc)
    return pc


def optimize_policy(model: PopularityModel, S: int, g_c: float) -> CachingPolicy:
    """Outage-minimizing caching policy for mean cluster occupancy g_c."""
    if S < 1:
        raise ValueError(f"cache size must be >= 1, got {S}")
    if S > model.M:
        raise ValueError(f"infeasible: cache size {S} exceeds library size {model.M}")
    if g_c <= 0:
        raise ValueError(f"g_c must be positive, got {g_c}")
    if S == model.M:
        return CachingPolicy(np.ones(model.M), S)
    pc = _waterfill_probs(model.pmf_table, S, float(g_c))
    return CachingPolicy(pc, S)


def closed_form_outage(policy: CachingPolicy, model: PopularityModel, g_c: float) -> float:
    """Cluster outage sum_f P(f)*exp(-g_c*Pc(f)) for Poisson(g_c) occupancy."""
    if policy.M != model.M:
        raise ValueError(
            f"policy covers {policy.M} files but the model has {model.M}"
        )
    return float(np.dot(model.pmf_table, np.exp(-g_c * policy.probs)))


def _interval_partition(probs: np.ndarray, S: int, offsets: np.ndarray) -> np.ndarray:
    """Exact-S placement: lay the M probabilities end to end on a segment of
    length S and pick the S files whose intervals contain u, u+1, ..., u+S-1.

    Each interval has length <= 1 and the points are spaced exactly 1 apart,
    so the S selected files are distinct and the marginal inclusion
    probability of file f is exactly Pc(f). offsets is one uniform in [0,1)
    per draw; returns an (n, S) int64 array of 1-based file indices.
    """
    edges = np.concatenate(([0.0], np.cumsum(probs)))
    edges[-1] = float(S)
    points = offsets[:, None] + np.arange(S)[None, :]
    files = np.searchsorted(edges, points.ravel(), side="right").reshape(-1, S)
    return np.minimum(files, len(probs)).astype(np.int64)


def place_caches_batch(policy: CachingPolicy, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n caches of exactly S distinct files, one uniform consumed per draw."""
    if policy.cache_size < 1:
        raise ValueError("cannot place caches for a zero-size policy")
    return _interval_partition(policy.probs, policy.cache_size, rng.random(n))


def place_caches(policy: CachingPolicy, rng: np.random.Generator) -> CacheSet:
    files = place_caches_batch(policy, rng, 1)[0]
    return CacheSet(slot1=frozenset(int(f) for f in files))


def build_split_policy(
    model: PopularityModel, S: int, gc1: float, gc2: float
) -> SplitCachingPolicy:
    """Split the cache into two S/2 subspaces, each optimized for its own g_c."""
    if S % 2 != 0:
        raise ValueError(
            f"split caching needs an even cache size; got S={S} (round up or down)"
        )
    if gc1 <= 0 or gc2 <= 0:
        raise ValueError("cluster occupancies must be positive")
    half = S // 2
    p1 = optimize_policy(model, half, gc1)
    p2 = optimize_policy(model, half, gc2)
    return SplitCachingPolicy(p1, p2, float(gc1), float(gc2))


def place_split_caches_batch(
    split: SplitCachingPolicy, rng: np.random.Generator, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n split caches; the two subsets of each user are disjoint.

    Subset 2 is rejection-resampled against subset 1. This distorts the
    slot-2 marginals by O(sum_f Pc1*Pc2), which is second order for the
    spread-out slot-1 policies the schemes use.
    """
    slot1 = place_caches_batch(split.policy_slot1, rng, n)
    slot2 = place_caches_batch(split.policy_slot2, rng, n)
    for _ in range(_MAX_SPLIT_RETRIES):
        clash = (slot2[:, :, None] == slot1[:, None, :]).any(axis=(1, 2))
        if not clash.any():
            return slot1, slot2
        redo = int(clash.sum())
        slot2[clash] = place_caches_batch(split.policy_slot2, rng, redo)
    raise RuntimeError(
        "could not draw disjoint cache subspaces; the two sub-policies "
        "force overlapping saturated files"
    )


def place_split_caches(split: SplitCachingPolicy, rng: np.random.Generator) -> CacheSet:
    s1, s2 = place_split_caches_batch(split, rng, 1)
    return CacheSet(
        slot1=frozenset(int(f) for f in s1[0]),
        slot2=frozenset(int(f) for f in s2[0]),
    )


def save_policy(policy: CachingPolicy, path) -> None:
    """Write a policy as columnar text: header ``f,pc``, one row per file."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("f,pc\n")
        for f, p in enumerate(policy.probs, start=1):
            fh.write(f"{f},{p:.17g}\n")


def load_policy(path) -> CachingPolicy:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "f,pc":
            raise ValueError(f"unexpected policy file header {header!r}")
        probs = [float(line.split(",")[1]) for line in fh if line.strip()]
    arr = np.asarray(probs)
    return CachingPolicy(arr, int(round(float(arr.sum()))))
