"""Achievable transmission schemes.

Scenario 1 (equal throughput): the epoch T' splits into a TDMA half, where
every served pair gets T'/(2N) seconds alone in the full band, and a
clustered half, where reuse-colored clusters round-robin their pairs, one
active TX per cluster at a time.

Scenario 2 (double time-slot): the clustered machinery runs twice, first with
the nominal cluster side against cache subspace 1, then with a shrunken side
sqrt(eps)*d against cache subspace 2, so short links carry bits at high rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    ClusterGrid,
    NetworkRealization,
    PairingOutcome,
    build_grid,
    grid_from_target_side,
    n_reuse_colors,
    pair_within_clusters,
    reuse_color,
)
from .phy import PhyConfig, path_gain
from .popularity import PopularityModel

REGIME_GAMMA_LT1 = "gamma_lt1"
REGIME_GAMMA_GT1 = "gamma_gt1"
REGIME_ZIPF_GT1 = "zipf_gt1"
REGIMES = (REGIME_GAMMA_LT1, REGIME_GAMMA_GT1, REGIME_ZIPF_GT1)


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme-level knobs plus the popularity model and cache size they act on."""

    regime: str
    model: PopularityModel
    S: int
    rho_or_alpha1: float
    epsilon: float | None = None  # slot-2 shrink factor, scenario 2 only
    C_sec: float = 4.0
    K: int = 1
    T_prime: float = 1.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}, expected one of {REGIMES}")
        if self.rho_or_alpha1 <= 0:
            raise ValueError("rho_or_alpha1 must be positive")
        if self.epsilon is not None and not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.C_sec <= 0:
            raise ValueError("C_sec must be positive")
        if self.T_prime <= 0:
            raise ValueError("T_prime must be positive")


@dataclass
class SlotResult:
    """Delivery outcome of one time slot."""

    label: str
    bits: np.ndarray
    served: np.ndarray
    link_rx: np.ndarray
    link_distance: np.ndarray
    link_rate: np.ndarray
    link_sinr: np.ndarray
    airtime: float
    bandwidth: float
    cluster_side: float | None
    link_interference: np.ndarray | None = None

    @property
    def total_bits(self) -> float:
        return float(self.bits.sum())

    @property
    def n_links(self) -> int:
        return len(self.link_rx)

    @property
    def min_sinr(self) -> float:
        return float(self.link_sinr.min()) if len(self.link_sinr) else math.inf

    @property
    def mean_rate(self) -> float:
        return float(self.link_rate.mean()) if len(self.link_rate) else 0.0

    @property
    def mean_distance(self) -> float:
        return float(self.link_distance.mean()) if len(self.link_distance) else 0.0

    @property
    def max_interference(self) -> float:
        if self.link_interference is None or not len(self.link_interference):
            return 0.0
        return float(self.link_interference.max())


@dataclass
class Schedule:
    """Per-resource activation record for transport-capacity accounting.

    A resource is either one TDMA activation (full band) or one
    (round, color) combination of the clustered slots. link_se is the
    realized spectral efficiency log2(1+SINR); link_is_w marks the
    deterministic max-power representative of each resource.
    """

    res_tau: np.ndarray
    res_bw: np.ndarray
    link_res: np.ndarray
    link_distance: np.ndarray
    link_se: np.ndarray
    link_gain: np.ndarray
    link_is_w: np.ndarray
    total_bandwidth: float
    T_prime: float


@dataclass
class SchemeResult:
    """Epoch outcome for every user plus per-slot breakdowns."""

    per_user_bits: np.ndarray
    per_user_served: np.ndarray
    slots: list[SlotResult]
    realized_cluster_sides: tuple[float, ...]
    T_prime: float
    schedule: Schedule | None = None

    @property
    def n_users(self) -> int:
        return len(self.per_user_bits)

    @property
    def outage_fraction(self) -> float:
        return 1.0 - float(self.per_user_served.mean())

    def slot(self, label: str) -> SlotResult:
        for s in self.slots:
            if s.label == label:
                return s
        raise KeyError(f"no slot labelled {label!r}")

    def transport_links(self) -> tuple[np.ndarray, np.ndarray]:
        """(distance, average rate bits/s) of every served (pair, slot)."""
        d = np.concatenate([s.link_distance for s in self.slots]) if self.slots else np.empty(0)
        bits = (
            np.concatenate([s.link_rate * s.airtime for s in self.slots])
            if self.slots
            else np.empty(0)
        )
        return d, bits / self.T_prime


def cluster_side(
    regime: str, model: PopularityModel, S: int, N: int, rho_or_alpha1: float
) -> float:
    """Target cluster side for the clustered delivery slot."""
    if regime == REGIME_GAMMA_LT1:
        d = math.sqrt(rho_or_alpha1 * model.M / (S * N))
    elif regime == REGIME_GAMMA_GT1:
        d = math.sqrt(rho_or_alpha1 * model.q / (S * N))
    elif regime == REGIME_ZIPF_GT1:
        d = math.sqrt(rho_or_alpha1 / (S * N))
    else:
        raise ValueError(f"unknown regime {regime!r}")
    if d > 1.0:
        raise ValueError(
            f"cluster side {d:.4g} exceeds the network; increase N or decrease the occupancy target"
        )
    return d


def tune_epsilon(regime: str, model: PopularityModel, S: int, q_or_M: float, C_sec: float):
    """Slot-2 shrink product: eps*rho (gamma<1) or eps*alpha1 (gamma>1).

    The caller divides by rho or alpha1 to get eps; raises if that eps would
    exceed 1 (network too small for the asymptotic tuning).
    """
    gamma = model.gamma
    if regime == REGIME_GAMMA_LT1:
        if gamma >= 1:
            raise ValueError(f"regime {regime} needs gamma < 1, model has {gamma}")
        product = C_sec * (S / q_or_M) ** (1.0 / (2.0 - gamma))
    elif regime == REGIME_GAMMA_GT1:
        if gamma <= 1:
            raise ValueError(f"regime {regime} needs gamma > 1, model has {gamma}")
        product = C_sec * math.sqrt(S / q_or_M)
    else:
        raise ValueError(f"slot-2 tuning is undefined for regime {regime!r}")
    return product


def derive_epsilon(cfg: SchemeConfig, N: int) -> float:
    """eps = tune_epsilon(...) / rho_or_alpha1, validated against 1."""
    q_or_m = cfg.model.M if cfg.regime == REGIME_GAMMA_LT1 else cfg.model.q
    product = tune_epsilon(cfg.regime, cfg.model, cfg.S, q_or_m, cfg.C_sec)
    eps = product / cfg.rho_or_alpha1
    if eps > 1.0:
        raise ValueError(
            f"slot-2 shrink factor eps={eps:.4g} exceeds 1: the configuration is "
            "not deep enough in the asymptotic regime (reduce C_sec or grow M/q)"
        )
    return eps


def _ordered_pairs_within_groups(sizes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All ordered (victim, interferer) index pairs inside contiguous groups.

    sizes are group lengths over a flat array of sum(sizes) rows; returns
    global row indices (i, j), i != j, j in i's group.
    """
    sizes = sizes.astype(np.int64)
    n_pairs = sizes * (sizes - 1)
    total = int(n_pairs.sum())
    if total == 0:
        e = np.empty(0, dtype=np.int64)
        return e, e
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    pair_group = np.repeat(np.arange(len(sizes)), n_pairs)
    pair_start = np.concatenate(([0], np.cumsum(n_pairs)[:-1]))
    p_local = np.arange(total, dtype=np.int64) - np.repeat(pair_start, n_pairs)
    n_of = np.repeat(sizes, n_pairs)
    i_local = p_local // (n_of - 1)
    j_local = p_local % (n_of - 1)
    j_local += j_local >= i_local
    base = np.repeat(starts, n_pairs)
    return base + i_local, base + j_local


def _clustered_bits(
    realization: NetworkRealization,
    pairing: PairingOutcome,
    grid: ClusterGrid,
    phy: PhyConfig,
    duration: float,
    label: str,
    collect_schedule: bool = False,
):
    """Round-robin reuse-colored delivery of the paired links.

    Every cluster activates its next pair each round; all active pairs hold
    their color's sub-channel for duration/R_max seconds, R_max being the
    largest per-cluster pair count.
    """
    n = realization.n_users
    bits = np.zeros(n)
    served = ~pairing.outage_flags
    bw = phy.subchannel_bandwidth
    L = pairing.n_links
    if L == 0:
        slot = SlotResult(
            label, bits, served, pairing.rx, pairing.distance,
            np.empty(0), np.empty(0), 0.0, bw, grid.side,
        )
        return slot, None

    # round index = rank of the link inside its cluster, deterministic rx order
    order = np.lexsort((pairing.rx, pairing.cell))
    cell_sorted = pairing.cell[order]
    boundaries = np.concatenate(([0], np.nonzero(np.diff(cell_sorted))[0] + 1))
    counts = np.diff(np.concatenate((boundaries, [L])))
    rounds = np.arange(L, dtype=np.int64) - np.repeat(boundaries, counts)
    r_max = int(counts.max())
    airtime = duration / r_max

    colors = reuse_color(grid, phy.K)
    link_color = colors[cell_sorted]
    res_key = rounds * n_reuse_colors(phy.K) + link_color

    # group links by (round, color) resource and accumulate cross interference
    g_order = np.argsort(res_key, kind="stable")
    g_key = res_key[g_order]
    g_bound = np.concatenate(([0], np.nonzero(np.diff(g_key))[0] + 1))
    g_sizes = np.diff(np.concatenate((g_bound, [L])))
    vic, intf = _ordered_pairs_within_groups(g_sizes)

    link_idx = order[g_order]  # grouped order -> original pairing rows
    tx_g = pairing.tx[link_idx]
    rx_g = pairing.rx[link_idx]
    pos = realization.positions
    interference = np.zeros(L)
    if len(vic):
        dx = pos[tx_g[intf], 0] - pos[rx_g[vic], 0]
        dy = pos[tx_g[intf], 1] - pos[rx_g[vic], 1]
        w = phy.Pmax * path_gain(np.hypot(dx, dy), phy)
        interference = np.bincount(vic, weights=w, minlength=L)

    gain = path_gain(pairing.distance[link_idx], phy)
    sinr = phy.Pmax * gain / (bw * phy.N0 + interference)
    rate = bw * np.log2(1.0 + phy.effective_sinr(sinr))
    np.add.at(bits, rx_g, rate * airtime)

    slot = SlotResult(
        label=label,
        bits=bits,
        served=served,
        link_rx=rx_g,
        link_distance=pairing.distance[link_idx],
        link_rate=rate,
        link_sinr=sinr,
        airtime=airtime,
        bandwidth=bw,
        cluster_side=grid.side,
        link_interference=interference,
    )
    schedule = None
    if collect_schedule:
        n_res = len(g_sizes)
        is_w = np.zeros(L, dtype=bool)
        is_w[g_bound] = True  # all powers equal; first of group is the representative
        schedule = dict(
            res_tau=np.full(n_res, airtime),
            res_bw=np.full(n_res, bw),
            link_res=np.repeat(np.arange(n_res), g_sizes),
            link_distance=pairing.distance[link_idx],
            link_se=np.log2(1.0 + phy.effective_sinr(sinr)),
            link_gain=gain,
            link_is_w=is_w,
        )
    return slot, schedule


def _tdma_bits(
    realization: NetworkRealization,
    pairing: PairingOutcome,
    phy: PhyConfig,
    T_prime: float,
    collect_schedule: bool = False,
):
    """Slot A: every served pair alone in the full band for T'/(2N) seconds."""
    n = realization.n_users
    bits = np.zeros(n)
    airtime = T_prime / (2.0 * n)
    gain = path_gain(pairing.distance, phy)
    snr = phy.Pmax * gain / (phy.B * phy.N0)
    rate = phy.B * np.log2(1.0 + phy.effective_sinr(snr))
    bits[pairing.rx] = rate * airtime
    slot = SlotResult(
        label="tdma",
        bits=bits,
        served=~pairing.outage_flags,
        link_rx=pairing.rx,
        link_distance=pairing.distance,
        link_rate=rate,
        link_sinr=snr,
        airtime=airtime,
        bandwidth=phy.B,
        cluster_side=None,
    )
    schedule = None
    if collect_schedule:
        L = pairing.n_links
        schedule = dict(
            res_tau=np.full(L, airtime),
            res_bw=np.full(L, phy.B),
            link_res=np.arange(L),
            link_distance=pairing.distance,
            link_se=np.log2(1.0 + phy.effective_sinr(snr)),
            link_gain=gain,
            link_is_w=np.ones(L, dtype=bool),
        )
    return slot, schedule


def _merge_schedules(parts: list[dict], phy: PhyConfig, T_prime: float) -> Schedule:
    off = 0
    res_tau, res_bw = [], []
    link_res, link_d, link_se, link_g, link_w = [], [], [], [], []
    for p in parts:
        res_tau.append(p["res_tau"])
        res_bw.append(p["res_bw"])
        link_res.append(p["link_res"] + off)
        link_d.append(p["link_distance"])
        link_se.append(p["link_se"])
        link_g.append(p["link_gain"])
        link_w.append(p["link_is_w"])
        off += len(p["res_tau"])
    return Schedule(
        res_tau=np.concatenate(res_tau),
        res_bw=np.concatenate(res_bw),
        link_res=np.concatenate(link_res),
        link_distance=np.concatenate(link_d),
        link_se=np.concatenate(link_se),
        link_gain=np.concatenate(link_g),
        link_is_w=np.concatenate(link_w),
        total_bandwidth=phy.B,
        T_prime=T_prime,
    )


def run_scenario1(
    realization: NetworkRealization,
    cfg: SchemeConfig,
    phy: PhyConfig,
    collect_schedule: bool = False,
) -> SchemeResult:
    """TDMA half plus clustered half over a single unsplit cache."""
    n = realization.n_users
    d_target = cluster_side(cfg.regime, cfg.model, cfg.S, n, cfg.rho_or_alpha1)
    k = grid_from_target_side(d_target)
    grid = build_grid(k, realization.positions)
    pairing = pair_within_clusters(realization, grid)

    slot_a, sched_a = _tdma_bits(realization, pairing, phy, cfg.T_prime, collect_schedule)
    slot_b, sched_b = _clustered_bits(
        realization, pairing, grid, phy, cfg.T_prime / 2.0, "cluster", collect_schedule
    )
    schedule = None
    if collect_schedule:
        parts = [s for s in (sched_a, sched_b) if s is not None]
        schedule = _merge_schedules(parts, phy, cfg.T_prime)
    return SchemeResult(
        per_user_bits=slot_a.bits + slot_b.bits,
        per_user_served=~pairing.outage_flags,
        slots=[slot_a, slot_b],
        realized_cluster_sides=(grid.side,),
        T_prime=cfg.T_prime,
        schedule=schedule,
    )


def run_scenario2(
    realization: NetworkRealization,
    cfg: SchemeConfig,
    phy: PhyConfig,
    collect_schedule: bool = False,
) -> SchemeResult:
    """Double time-slot delivery over a split cache.

    Slot 1: clustered delivery, side d1, cache subspace 1. Slot 2: clustered
    delivery, side d2 = sqrt(eps)*d1, cache subspace 2. A user is in outage
    only if unserved in both slots.
    """
    if realization.caches_slot1 is None or realization.caches_slot2 is None:
        raise ValueError("scenario 2 needs a realization drawn from a split caching policy")
    eps = cfg.epsilon if cfg.epsilon is not None else derive_epsilon(cfg, realization.n_users)
    n = realization.n_users
    d1 = cluster_side(cfg.regime, cfg.model, cfg.S, n, cfg.rho_or_alpha1)
    d2 = math.sqrt(eps) * d1

    grid1 = build_grid(grid_from_target_side(d1), realization.positions)
    grid2 = build_grid(grid_from_target_side(d2), realization.positions)
    pairing1 = pair_within_clusters(realization, grid1, realization.caches_slot1)
    pairing2 = pair_within_clusters(realization, grid2, realization.caches_slot2)

    half = cfg.T_prime / 2.0
    slot1, sched1 = _clustered_bits(
        realization, pairing1, grid1, phy, half, "cluster1", collect_schedule
    )
    slot2, sched2 = _clustered_bits(
        realization, pairing2, grid2, phy, half, "cluster2", collect_schedule
    )
    schedule = None
    if collect_schedule:
        parts = [s for s in (sched1, sched2) if s is not None]
        schedule = _merge_schedules(parts, phy, cfg.T_prime)
    served = slot1.served | slot2.served
    return SchemeResult(
        per_user_bits=slot1.bits + slot2.bits,
        per_user_served=served,
        slots=[slot1, slot2],
        realized_cluster_sides=(grid1.side, grid2.side),
        T_prime=cfg.T_prime,
        schedule=schedule,
    )
