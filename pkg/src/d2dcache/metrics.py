"""Throughput, outage and transport-capacity extraction from scheme results.

Per-user throughput over an epoch is bits/T'. The network figure of merit is
the minimum over user indices of the across-realization mean throughput; the
outage probability is the mean fraction of users that no scheme slot served.
Transport capacity sums distance times average rate over scheduled pairs and
is checked against the closed-form upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .phy import PhyConfig
from .schemes import Schedule, SchemeResult


@dataclass
class ThroughputOutageEstimate:
    T_min_avg: float
    p_o_hat: float
    n_realizations: int
    std_errors: dict[str, float]
    mean_throughput: float

    def __post_init__(self):
        if not (0.0 <= self.p_o_hat <= 1.0):
            raise ValueError(f"outage estimate {self.p_o_hat} outside [0, 1]")
        if self.T_min_avg < 0:
            raise ValueError("throughput cannot be negative")


@dataclass
class ThroughputAccumulator:
    """Streaming reduction over realizations; deterministic when results are
    added in a fixed (trial-index) order."""

    T_prime: float
    n_users: int = 0
    n_real: int = 0
    sum_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    sum_t2: np.ndarray = field(default_factory=lambda: np.empty(0))
    outage_fracs: list = field(default_factory=list)
    net_means: list = field(default_factory=list)

    def add(self, result: SchemeResult) -> None:
        t = result.per_user_bits / self.T_prime
        if self.n_real == 0:
            self.n_users = result.n_users
            self.sum_t = np.zeros(self.n_users)
            self.sum_t2 = np.zeros(self.n_users)
        elif result.n_users != self.n_users:
            raise ValueError("all realizations must have the same number of users")
        self.sum_t += t
        self.sum_t2 += t * t
        self.outage_fracs.append(result.outage_fraction)
        self.net_means.append(float(t.mean()))
        self.n_real += 1

    @property
    def per_index_means(self) -> np.ndarray:
        return self.sum_t / self.n_real

    @property
    def per_index_vars(self) -> np.ndarray:
        m = self.per_index_means
        n = self.n_real
        if n < 2:
            return np.zeros_like(m)
        return np.maximum(self.sum_t2 / n - m * m, 0.0) * n / (n - 1)

    def finish(self) -> ThroughputOutageEstimate:
        if self.n_real == 0:
            raise ValueError("cannot estimate from zero realizations")
        means = self.per_index_means
        u_min = int(np.argmin(means))
        n = self.n_real
        se_tmin = math.sqrt(self.per_index_vars[u_min] / n) if n > 1 else 0.0
        po = np.asarray(self.outage_fracs)
        se_po = float(po.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        nm = np.asarray(self.net_means)
        se_mean = float(nm.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return ThroughputOutageEstimate(
            T_min_avg=float(means[u_min]),
            p_o_hat=float(po.mean()),
            n_realizations=n,
            std_errors={"T_min_avg": se_tmin, "p_o_hat": se_po, "mean_throughput": se_mean},
            mean_throughput=float(nm.mean()),
        )


def estimate(results, T_prime: float) -> ThroughputOutageEstimate:
    """Aggregate a collection of SchemeResult into throughput/outage figures."""
    acc = ThroughputAccumulator(T_prime=T_prime)
    for r in results:
        acc.add(r)
    return acc.finish()


@dataclass
class TransportRecord:
    distances: np.ndarray
    rates: np.ndarray
    C_gamma: float
    bound_terms: dict[str, float] = field(default_factory=dict)


@dataclass
class BoundCheck:
    holds: bool
    slack: float
    lhs: float
    rhs: float
    terms: dict[str, float]


def transport_capacity(distances, rates) -> TransportRecord:
    """C_gamma = sum over pairs of distance * average rate (meter-bits/s)."""
    d = np.asarray(distances, dtype=np.float64)
    c = np.asarray(rates, dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("link distances must be non-negative")
    if d.shape != c.shape:
        raise ValueError("distances and rates must be parallel arrays")
    return TransportRecord(distances=d, rates=c, C_gamma=float(np.dot(d, c)))


def bound_constant(alpha: float) -> float:
    """alpha*(3*sqrt(2)+1) + 2*(2*(sqrt(2)+1))^alpha."""
    return alpha * (3.0 * math.sqrt(2.0) + 1.0) + 2.0 * (2.0 * (math.sqrt(2.0) + 1.0)) ** alpha


def check_transport_bound(
    schedule: Schedule,
    phy: PhyConfig,
    R0: float,
    eps0: float,
    record: TransportRecord | None = None,
) -> BoundCheck:
    """Verify the transport-capacity upper bound on one realized schedule.

    LHS is the schedule's realized transport capacity (cross-checked against
    record.C_gamma when a record is supplied). RHS adds, per time-frequency
    resource, the max-power pair's noise-only transport rate and the actual
    transport of short (< R0) non-representative pairs, plus the closed-form
    term B*log2(e)/eps0 * sqrt(SN/(rho' M)) * C(alpha) with
    sqrt(SN/(rho' M)) expressed through R0 = eps0*sqrt(rho' M/(S N)).
    """
    if R0 <= 0 or eps0 <= 0:
        raise ValueError("R0 and eps0 must be positive")
    w = schedule.res_tau * schedule.res_bw / (schedule.total_bandwidth * schedule.T_prime)
    link_w = w[schedule.link_res] * schedule.total_bandwidth

    lhs = float(np.sum(link_w * schedule.link_distance * schedule.link_se))
    if record is not None and abs(record.C_gamma - lhs) > 1e-9 * max(1.0, abs(lhs)):
        raise ValueError(
            f"transport record C_gamma={record.C_gamma:.6g} disagrees with the "
            f"schedule's realized transport {lhs:.6g}"
        )

    is_w = schedule.link_is_w
    bw_of_link = schedule.res_bw[schedule.link_res]
    se_alone = np.log2(1.0 + phy.Pmax * schedule.link_gain / (phy.N0 * bw_of_link))
    cw_term = float(np.sum(link_w[is_w] * schedule.link_distance[is_w] * se_alone[is_w]))

    short = (~is_w) & (schedule.link_distance < R0)
    cr0_term = float(np.sum(link_w[short] * schedule.link_distance[short] * schedule.link_se[short]))

    # sqrt(SN/(rho'M)) = eps0 / R0
    third = schedule.total_bandwidth * math.log2(math.e) / eps0 * (eps0 / R0) * bound_constant(phy.alpha)

    rhs = cw_term + cr0_term + third
    return BoundCheck(
        holds=lhs <= rhs,
        slack=rhs - lhs,
        lhs=lhs,
        rhs=rhs,
        terms={"C_W": cw_term, "C_R0": cr0_term, "third": third},
    )
