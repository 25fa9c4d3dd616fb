"""Experiment driver: per-point Monte Carlo loops, sweeps, fits, artifacts.

Trial t of a point runs on seed base_seed + t. Trials are distributed over a
thread pool but reduced in trial order, so artifacts are byte-identical
regardless of the worker count.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, caching, metrics, schemes
from .config import ExperimentConfig, config_to_dict, sweep_points, swept_param_names
from .geometry import build_realization
from .popularity import PopularityModel

SCHEMA_VERSION = 1

CSV_FIXED_COLUMNS = [
    "T_min_avg",
    "T_stderr",
    "p_o_hat",
    "p_o_stderr",
    "C_gamma_mean",
    "bound_slack_min",
]


@dataclass
class PointResult:
    params: dict
    estimate: metrics.ThroughputOutageEstimate | None
    c_gamma_mean: float
    bound_slack_min: float
    closed_form_outage: float
    epsilon: float | None
    cluster_sides: tuple
    error: str | None = None


@dataclass
class ResultArtifact:
    config: dict
    points: list[PointResult]
    fit: dict | None
    predicted_exponent: float | None
    schema_version: int = SCHEMA_VERSION
    seed_info: dict = field(default_factory=dict)


def occupancy_target(cfg: ExperimentConfig) -> float:
    """Mean users per cluster the scenario-1 policy is optimized for."""
    if cfg.regime == "gamma_lt1":
        return cfg.rho_or_alpha1 * cfg.M / cfg.S
    if cfg.regime == "gamma_gt1":
        return cfg.rho_or_alpha1 * cfg.q / cfg.S
    return cfg.rho_or_alpha1 / cfg.S


def build_point_inputs(cfg: ExperimentConfig):
    """Model, caching policy and scheme config for one sweep point."""
    model = PopularityModel(M=cfg.M, gamma=cfg.gamma, q=cfg.q)
    scheme_cfg = schemes.SchemeConfig(
        regime=cfg.regime,
        model=model,
        S=cfg.S,
        rho_or_alpha1=cfg.rho_or_alpha1,
        C_sec=cfg.C_sec,
        K=cfg.phy.K,
        T_prime=cfg.T_prime,
    )
    # fail fast on an infeasible cluster side so the point is skipped cleanly
    schemes.cluster_side(cfg.regime, model, cfg.S, cfg.N, cfg.rho_or_alpha1)
    g_c = occupancy_target(cfg)
    epsilon = None
    if cfg.scheme == "scenario2":
        epsilon = schemes.derive_epsilon(scheme_cfg, cfg.N)
        policy = caching.build_split_policy(model, cfg.S, 2.0 * g_c, 2.0 * epsilon * g_c)
        closed_form = caching.closed_form_outage(policy.policy_slot1, model, policy.gc1)
    else:
        policy = caching.optimize_policy(model, cfg.S, g_c)
        closed_form = caching.closed_form_outage(policy, model, g_c)
    return model, policy, scheme_cfg, epsilon, closed_form


def run_trial(cfg: ExperimentConfig, inputs, trial: int):
    model, policy, scheme_cfg, epsilon, _ = inputs
    seed = cfg.base_seed + trial
    realization = build_realization(model, policy, cfg.N, seed)
    if cfg.scheme == "scenario2":
        result = schemes.run_scenario2(
            realization, scheme_cfg, cfg.phy,
            collect_schedule=cfg.check_bounds,
        )
    else:
        result = schemes.run_scenario1(
            realization, scheme_cfg, cfg.phy,
            collect_schedule=cfg.check_bounds,
        )
    dist, rates = result.transport_links()
    c_gamma = metrics.transport_capacity(dist, rates).C_gamma
    slack = math.nan
    if cfg.check_bounds and result.schedule is not None:
        r0 = cfg.eps0 * math.sqrt(occupancy_target(cfg) / cfg.N)
        check = metrics.check_transport_bound(result.schedule, cfg.phy, r0, cfg.eps0)
        slack = check.slack if check.holds else -abs(check.slack)
    return result, c_gamma, slack


def run_point(cfg: ExperimentConfig, threads: int) -> PointResult:
    params = {
        "N": cfg.N, "M": cfg.M, "S": cfg.S, "gamma": cfg.gamma, "q": cfg.q,
        "rho_or_alpha1": cfg.rho_or_alpha1,
    }
    try:
        inputs = build_point_inputs(cfg)
    except ValueError as exc:
        return PointResult(
            params=params, estimate=None, c_gamma_mean=math.nan,
            bound_slack_min=math.nan, closed_form_outage=math.nan,
            epsilon=None, cluster_sides=(), error=str(exc),
        )
    acc = metrics.ThroughputAccumulator(T_prime=cfg.T_prime)
    c_gammas: list[float] = []
    slacks: list[float] = []
    sides: tuple = ()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for result, c_gamma, slack in pool.map(
            lambda t: run_trial(cfg, inputs, t), range(cfg.n_realizations)
        ):
            acc.add(result)
            c_gammas.append(c_gamma)
            slacks.append(slack)
            sides = result.realized_cluster_sides
    est = acc.finish()
    slack_min = math.nan
    if cfg.check_bounds:
        slack_min = float(np.nanmin(slacks)) if slacks else math.nan
    return PointResult(
        params=params,
        estimate=est,
        c_gamma_mean=float(np.mean(c_gammas)),
        bound_slack_min=slack_min,
        closed_form_outage=inputs[4],
        epsilon=inputs[3],
        cluster_sides=sides,
    )


def driving_ratio(cfg: ExperimentConfig, params: dict) -> float:
    if cfg.regime == "gamma_lt1":
        return params["S"] / params["M"]
    return params["S"] / params["q"]


def run(cfg: ExperimentConfig) -> ResultArtifact:
    """Run every sweep point and fit the throughput scaling when possible."""
    threads = cfg.threads or os.cpu_count() or 1
    points = [run_point(p, threads) for p in sweep_points(cfg)]

    fit = None
    exponent = None
    regime_key = f"{cfg.scheme}_{'lt1' if cfg.regime == 'gamma_lt1' else 'gt1'}"
    if cfg.regime == "zipf_gt1":
        regime_key = "zipf_gt1"
    try:
        exponent = analysis.predicted_exponent(regime_key, cfg.gamma)
    except ValueError:
        exponent = None
    good = [p for p in points if p.estimate is not None and p.estimate.T_min_avg > 0]
    if cfg.sweep is not None and len(good) >= 2:
        x = [driving_ratio(cfg, p.params) for p in good]
        y = [p.estimate.T_min_avg for p in good]
        try:
            f = analysis.fit_loglog(x, y)
            fit = {
                "x": "S/M" if cfg.regime == "gamma_lt1" else "S/q",
                "slope": f.slope,
                "intercept": f.intercept,
                "r_squared": f.r_squared,
                "n_points": f.n_points,
                "slope_stderr": f.slope_stderr,
            }
        except ValueError:
            fit = None
    return ResultArtifact(
        config=config_to_dict(cfg),
        points=points,
        fit=fit,
        predicted_exponent=exponent,
        seed_info={
            "base_seed": cfg.base_seed,
            "trial_seeds": f"base_seed + 0..{cfg.n_realizations - 1} per point",
        },
    )


def _fmt(x) -> str:
    """Shortest round-trip decimal for floats; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return repr(x)
    return str(x)


def artifact_rows(artifact: ResultArtifact, cfg: ExperimentConfig) -> tuple[list[str], list[list[str]]]:
    swept = swept_param_names(cfg)
    header = ["point", *swept, *CSV_FIXED_COLUMNS]
    rows = []
    for i, p in enumerate(artifact.points):
        est = p.estimate
        row = [str(i), *[_fmt(p.params[name]) for name in swept]]
        if est is None:
            row += [""] * 4
        else:
            row += [
                _fmt(est.T_min_avg),
                _fmt(est.std_errors["T_min_avg"]),
                _fmt(est.p_o_hat),
                _fmt(est.std_errors["p_o_hat"]),
            ]
        row += [_fmt(p.c_gamma_mean), _fmt(p.bound_slack_min)]
        rows.append(row)
    return header, rows


def artifact_to_dict(artifact: ResultArtifact) -> dict:
    def _num(x):
        return None if (isinstance(x, float) and math.isnan(x)) else x

    points = []
    for p in artifact.points:
        entry = {
            "params": p.params,
            "closed_form_outage": _num(p.closed_form_outage),
            "c_gamma_mean": _num(p.c_gamma_mean),
            "bound_slack_min": _num(p.bound_slack_min),
            "epsilon": p.epsilon,
            "cluster_sides": list(p.cluster_sides),
            "error": p.error,
        }
        if p.estimate is not None:
            entry["estimate"] = {
                "T_min_avg": p.estimate.T_min_avg,
                "p_o_hat": p.estimate.p_o_hat,
                "mean_throughput": p.estimate.mean_throughput,
                "n_realizations": p.estimate.n_realizations,
                "std_errors": p.estimate.std_errors,
            }
        points.append(entry)
    return {
        "schema_version": artifact.schema_version,
        "config": artifact.config,
        "seed_info": artifact.seed_info,
        "predicted_exponent": artifact.predicted_exponent,
        "fit": artifact.fit,
        "points": points,
    }


def write_artifact(
    artifact: ResultArtifact,
    cfg: ExperimentConfig,
    out_dir,
    fmt: str = "both",
    wall_clock_s: float | None = None,
) -> list[str]:
    """Write results.csv / results.json plus a non-deterministic run_info

    sidecar (timing lives there so result files stay byte-stable)."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        header, rows = artifact_rows(artifact, cfg)
        path = os.path.join(out_dir, "results.csv")
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
        written.append(path)
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, "results.json")
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            json.dump(artifact_to_dict(artifact), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    info = {
        "wall_clock_seconds": wall_clock_s,
        "written_at_unix": time.time(),
        "threads": cfg.threads or os.cpu_count() or 1,
    }
    with open(os.path.join(out_dir, "run_info.json"), "w", encoding="ascii") as fh:
        json.dump(info, fh, indent=2)
    return written
