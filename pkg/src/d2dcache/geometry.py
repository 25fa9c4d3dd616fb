"""Network geometry: binomial point process, square cluster grid, frequency
reuse coloring, and TX-RX pairing confined to clusters.

The network is the unit square. A grid of k x k equal square cells partitions
it; a user can be served only by a same-cell user (itself included) that
caches its requested file. The nearest such candidate is chosen, ties broken
by lowest user index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .caching import CachingPolicy, SplitCachingPolicy, place_caches_batch, place_split_caches_batch
from .popularity import PopularityModel, sample_request


@dataclass(frozen=True)
class NetworkRealization:
    """One drawn network: positions, requests and cache contents of N users.

    caches is an (N, S) int64 array of 1-based file indices. In split mode
    caches_slot1/caches_slot2 hold the two disjoint (N, S/2) subspaces and
    caches is their concatenation.
    """

    positions: np.ndarray
    requests: np.ndarray
    caches: np.ndarray
    seed: int
    caches_slot1: np.ndarray | None = None
    caches_slot2: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.positions)
        if len(self.requests) != n or len(self.caches) != n:
            raise ValueError("positions, requests and caches must have equal length")
        if np.any(self.positions < 0.0) or np.any(self.positions > 1.0):
            raise ValueError("all coordinates must lie in [0, 1]")

    @property
    def n_users(self) -> int:
        return len(self.positions)

    def cache_set(self, u: int) -> frozenset:
        return frozenset(int(f) for f in self.caches[u])


@dataclass(frozen=True)
class ClusterGrid:
    """k x k partition of the unit square; cell_id = cx * k + cy."""

    k: int
    cell_id: np.ndarray

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"grid needs k >= 1, got {self.k}")

    @property
    def side(self) -> float:
        return 1.0 / self.k

    @property
    def n_cells(self) -> int:
        return self.k * self.k

    @property
    def membership(self) -> dict[int, list[int]]:
        """cell_id -> user indices (for inspection; sims use cell_id directly)."""
        out: dict[int, list[int]] = {}
        for u, c in enumerate(self.cell_id):
            out.setdefault(int(c), []).append(u)
        return out


@dataclass(frozen=True)
class PairingOutcome:
    """Per-cell nearest-candidate server assignment.

    tx/rx/distance/file/cell are parallel arrays over established links;
    outage_flags[u] is True iff no same-cell user (u included) caches
    requests[u].
    """

    tx: np.ndarray
    rx: np.ndarray
    distance: np.ndarray
    file: np.ndarray
    cell: np.ndarray
    outage_flags: np.ndarray

    @property
    def n_links(self) -> int:
        return len(self.rx)


def place_users(N: int, rng: np.random.Generator) -> np.ndarray:
    """N independent uniform points on the unit square, (N, 2) float64."""
    if N < 1:
        raise ValueError(f"need at least one user, got N={N}")
    return rng.random((N, 2))


def cell_of_point(x: float, y: float, k: int) -> tuple[int, int]:
    """Cell coordinates of a point, boundary clamped into the grid."""
    return min(int(x * k), k - 1), min(int(y * k), k - 1)


def build_grid(k: int, positions: np.ndarray) -> ClusterGrid:
    if k < 1:
        raise ValueError(f"grid needs k >= 1, got {k}")
    cx = np.minimum((positions[:, 0] * k).astype(np.int64), k - 1)
    cy = np.minimum((positions[:, 1] * k).astype(np.int64), k - 1)
    return ClusterGrid(k=k, cell_id=cx * k + cy)


def grid_from_target_side(d_target: float) -> int:
    """Cells per side for a requested cluster side, half-up rounding of 1/d."""
    if not (0.0 < d_target <= 1.0):
        raise ValueError(f"cluster side must be in (0, 1], got {d_target}")
    return max(1, int(math.floor(1.0 / d_target + 0.5)))


def reuse_color(grid: ClusterGrid, K: int) -> np.ndarray:
    """Color of every cell, one of (2(K+1))^2 values.

    color(cx, cy) = (cx mod p) * p + (cy mod p) with p = 2(K+1): co-channel
    cells sit at offsets that are multiples of p on both axes.
    """
    if K < 1:
        raise ValueError(f"reuse parameter K must be >= 1, got {K}")
    p = 2 * (K + 1)
    cells = np.arange(grid.n_cells)
    cx, cy = cells // grid.k, cells % grid.k
    return (cx % p) * p + (cy % p)


def n_reuse_colors(K: int) -> int:
    return (2 * (K + 1)) ** 2


def _nearest_candidate_links(
    positions: np.ndarray,
    requests: np.ndarray,
    cache_cols: np.ndarray,
    cell_id: np.ndarray,
    n_cells: int,
):
    """Vectorized nearest same-cell cached-copy search.

    Builds an inverted (file, cell) -> users index over the cache columns and
    resolves every user's request against it. Ties on distance break toward
    the lowest candidate user index.
    """
    n = len(positions)
    s = cache_cols.shape[1]
    owner = np.repeat(np.arange(n, dtype=np.int64), s)
    key = cache_cols.astype(np.int64).ravel() * n_cells + cell_id[owner]
    order = np.argsort(key, kind="stable")
    skey = key[order]
    sowner = owner[order]

    qkey = requests.astype(np.int64) * n_cells + cell_id
    lo = np.searchsorted(skey, qkey, side="left")
    hi = np.searchsorted(skey, qkey, side="right")
    counts = hi - lo
    outage = counts == 0

    served = np.nonzero(~outage)[0]
    c_served = counts[served]
    total = int(c_served.sum())
    if total == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, np.empty(0), outage

    rx_rep = np.repeat(served, c_served)
    starts = np.concatenate(([0], np.cumsum(c_served)[:-1]))
    offs = np.arange(total, dtype=np.int64) - np.repeat(starts, c_served)
    cand = sowner[np.repeat(lo[served], c_served) + offs]

    diff = positions[cand] - positions[rx_rep]
    d2 = diff[:, 0] ** 2 + diff[:, 1] ** 2
    # group-wise argmin with (distance, candidate index) ordering; groups are
    # already contiguous so only intra-group order needs fixing
    pick = np.lexsort((cand, d2, rx_rep))
    first = pick[starts]
    return cand[first], served, np.sqrt(d2[first]), outage


def pair_within_clusters(
    realization: NetworkRealization,
    grid: ClusterGrid,
    cache_cols: np.ndarray | None = None,
) -> PairingOutcome:
    """Pair every user with the nearest same-cell holder of its request.

    cache_cols selects which cache columns to search (defaults to the full
    caches; the double time-slot scheme passes one subspace at a time).
    """
    cols = realization.caches if cache_cols is None else cache_cols
    tx, rx, dist, outage = _nearest_candidate_links(
        realization.positions, realization.requests, cols, grid.cell_id, grid.n_cells
    )
    return PairingOutcome(
        tx=tx,
        rx=rx,
        distance=dist,
        file=realization.requests[rx],
        cell=grid.cell_id[rx],
        outage_flags=outage,
    )


def build_realization(
    model: PopularityModel,
    policy: CachingPolicy | SplitCachingPolicy,
    N: int,
    seed: int,
) -> NetworkRealization:
    """Draw a full network realization from one seeded stream.

    Draw order is fixed (positions, then requests, then cache offsets) so a
    seed pins the realization bit-exactly.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    pos = place_users(N, rng)
    req = sample_request(model, rng, size=N)
    if isinstance(policy, SplitCachingPolicy):
        s1, s2 = place_split_caches_batch(policy, rng, N)
        return NetworkRealization(
            positions=pos,
            requests=req,
            caches=np.concatenate([s1, s2], axis=1),
            seed=seed,
            caches_slot1=s1,
            caches_slot2=s2,
        )
    caches = place_caches_batch(policy, rng, N)
    return NetworkRealization(positions=pos, requests=req, caches=caches, seed=seed)


def dump_realization(realization: NetworkRealization, path) -> None:
    """Line-oriented debug dump: user_index x y request cached_files..."""
    with open(path, "w", encoding="ascii") as fh:
        for u in range(realization.n_users):
            x, y = realization.positions[u]
            files = " ".join(str(int(f)) for f in realization.caches[u])
            fh.write(f"{u} {x!r} {y!r} {int(realization.requests[u])} {files}\n")
