"""Experiment configuration: a single YAML file drives simulate/sweep runs.

Sweeps vary one parameter over a value list; coupled parameters are derived
per point from arithmetic expressions over the swept value (e.g. N: "50 * M").
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import yaml

from .phy import PhyConfig
from .schemes import REGIMES

SCHEMES = ("scenario1", "scenario2")

# Unit-free normalization: B = 1 Hz, T' = 1 s, Pmax = 1 W, Pmax/(N0*B) = 1e6.
# chi is set so the receive-power gain cap binds only at sub-cluster range and
# cluster-scale links stay inside the power-law region (see README).
DEFAULT_PHY = {
    "chi": 1e-11,
    "alpha": 4.0,
    "N0": 1e-6,
    "B": 1.0,
    "Pmax": 1.0,
    "K": 1,
    "gain_cap": 1.0,
}

_INT_FIELDS = {"N", "M", "S", "n_realizations", "base_seed"}


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    couple: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    regime: str
    N: int
    M: int
    S: int
    gamma: float
    q: float
    rho_or_alpha1: float
    n_realizations: int
    base_seed: int
    C_sec: float = 4.0
    T_prime: float = 1.0
    eps0: float = 0.1
    check_bounds: bool = False
    threads: int | None = None
    phy: PhyConfig | None = None
    sweep: SweepSpec | None = None

    def __post_init__(self):
        if self.phy is None:
            object.__setattr__(self, "phy", PhyConfig(**DEFAULT_PHY))
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        for name in ("N", "M", "S", "n_realizations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.gamma < 0 or self.q < 0:
            raise ValueError("gamma and q must be non-negative")
        if self.rho_or_alpha1 <= 0 or self.C_sec <= 0 or self.T_prime <= 0 or self.eps0 <= 0:
            raise ValueError("rho_or_alpha1, C_sec, T_prime and eps0 must be positive")
        if self.regime == "gamma_lt1" and self.gamma >= 1:
            raise ValueError(f"regime gamma_lt1 needs gamma < 1, got {self.gamma}")
        if self.regime in ("gamma_gt1", "zipf_gt1") and self.gamma <= 1:
            raise ValueError(f"regime {self.regime} needs gamma > 1, got {self.gamma}")
        if self.scheme == "scenario2" and self.S % 2 != 0:
            raise ValueError("scenario2 splits the cache: S must be even")
        if self.scheme == "scenario2" and self.regime == "zipf_gt1":
            raise ValueError(
                "the double time-slot scheme has no slot-2 tuning rule in the "
                "constant-plateau regime; use scenario1 with zipf_gt1"
            )
        self._warn_regime()

    def _warn_regime(self):
        # asymptotic preconditions have no finite-size threshold; warn, not fail
        if self.regime == "gamma_lt1" and self.q > self.M:
            warnings.warn(
                f"plateau q={self.q} exceeds library size M={self.M}; the "
                "popularity law is nearly uniform and the heavy-tailed "
                "scalings will be washed out",
                stacklevel=3,
            )
        if self.regime == "gamma_gt1" and self.q > self.M / 10:
            warnings.warn(
                f"light-tailed regime expects q well below M, got q={self.q}, "
                f"M={self.M}; scaling predictions may be off at this size",
                stacklevel=3,
            )

    def point(self, **overrides) -> "ExperimentConfig":
        return replace(self, sweep=None, **overrides)


def _eval_coupling(expr: str, env: dict) -> float:
    """Arithmetic over the swept variables, e.g. '50 * M' or 'M // 8 + 1'."""
    try:
        return eval(expr, {"__builtins__": {}}, dict(env))  # config-local arithmetic
    except Exception as exc:
        raise ValueError(f"cannot evaluate coupling expression {expr!r}: {exc}") from exc


def sweep_points(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    """Expand a config into per-point configs (a single point if no sweep)."""
    if cfg.sweep is None:
        return [cfg]
    points = []
    for value in cfg.sweep.values:
        env = {cfg.sweep.param: value}
        overrides = {cfg.sweep.param: value}
        for name, expr in cfg.sweep.couple.items():
            env[name] = _eval_coupling(expr, env)
            overrides[name] = env[name]
        for name in list(overrides):
            if name in _INT_FIELDS:
                overrides[name] = int(round(overrides[name]))
        points.append(cfg.point(**overrides))
    return points


def swept_param_names(cfg: ExperimentConfig) -> list[str]:
    if cfg.sweep is None:
        return []
    return [cfg.sweep.param, *cfg.sweep.couple.keys()]


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = {
        "scheme": cfg.scheme,
        "regime": cfg.regime,
        "N": cfg.N,
        "M": cfg.M,
        "S": cfg.S,
        "gamma": cfg.gamma,
        "q": cfg.q,
        "rho_or_alpha1": cfg.rho_or_alpha1,
        "C_sec": cfg.C_sec,
        "n_realizations": cfg.n_realizations,
        "base_seed": cfg.base_seed,
        "T_prime": cfg.T_prime,
        "eps0": cfg.eps0,
        "check_bounds": cfg.check_bounds,
        "phy": {
            "chi": cfg.phy.chi,
            "alpha": cfg.phy.alpha,
            "N0": cfg.phy.N0,
            "B": cfg.phy.B,
            "Pmax": cfg.phy.Pmax,
            "K": cfg.phy.K,
            "gain_cap": cfg.phy.gain_cap,
            "sinr_ceiling": cfg.phy.sinr_ceiling,
        },
    }
    if cfg.sweep is not None:
        d["sweep"] = {
            "param": cfg.sweep.param,
            "values": list(cfg.sweep.values),
            "couple": dict(cfg.sweep.couple),
        }
    return d


def config_from_dict(raw: dict) -> ExperimentConfig:
    data = dict(raw)
    phy_raw = {**DEFAULT_PHY, **(data.pop("phy", {}) or {})}
    phy = PhyConfig(**phy_raw)
    sweep_raw = data.pop("sweep", None)
    sweep = None
    if sweep_raw:
        sweep = SweepSpec(
            param=sweep_raw["param"],
            values=tuple(sweep_raw["values"]),
            couple=dict(sweep_raw.get("couple", {}) or {}),
        )
    threads = data.pop("threads", None)
    known = {
        "scheme", "regime", "N", "M", "S", "gamma", "q", "rho_or_alpha1",
        "C_sec", "n_realizations", "base_seed", "T_prime", "eps0", "check_bounds",
    }
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    missing = {"scheme", "regime", "N", "M", "S", "gamma", "q",
               "rho_or_alpha1", "n_realizations", "base_seed"} - set(data)
    if missing:
        raise ValueError(f"config is missing required keys: {sorted(missing)}")
    return ExperimentConfig(phy=phy, sweep=sweep, threads=threads, **data)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} did not parse to a mapping")
    return config_from_dict(raw)
