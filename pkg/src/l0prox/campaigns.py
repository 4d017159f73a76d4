"""Seeded verification campaigns: generate, solve, run the oracle, certify, aggregate.

Each campaign is a pure function of its config.  Trials are independent and
keyed by `seed + i`, so they can run in any order or in parallel; results are
aggregated in seed order.
"""
from __future__ import annotations

import dataclasses
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable

import numpy as np

from .core import (
    ConfigError, HypothesisError, NonDecreaseDetected, SupportGrowthDetected,
    normalize_instance, objective,
)
from .pgd import PgdOptions, ista_init, pgd_map, pgd_solve
from .randomized import (
    JlDistribution, pgd_rdr_solve, pgd_rma_solve, range_finder, rdr_ista_init,
    reduce_instance, rma_ista_init, sample_jl,
)
from .rng import stream
from .synth import generate
from .theory import (
    b_feasible_interval, brute_force_global, halko_error_constant, jl_failure_rate,
    local_solution_residual, product_projection_check, rdr_gap_bounds, rma_gap_bounds,
    theorem1_bound,
)

__all__ = ["CampaignConfig", "CAMPAIGNS", "run_campaign", "binomial_slack", "worker_count"]

LOCAL_TOL = 1e-6
FIXED_POINT_TOL = 1e-8


@dataclasses.dataclass(frozen=True)
class CampaignConfig:
    campaign: str = "theorem1"
    trials: int | None = None
    seed: int = 0
    d: int | None = None
    n: int | None = None
    profile: str = "planted_sparse"
    rate: float = 0.7
    k_star: int = 2
    noise: float = 0.05
    lam: float = 0.05
    tau: float = 1.1
    eps: float = 1e-12
    max_iter: int = 1_000_000
    k: int | None = None
    k0: int | None = None
    m: int | None = None
    dist: str = "gaussian"
    c: float = 1.0
    delta: float = 0.1
    jl_eps: float = 0.5
    vector_dim: int = 100
    max_support_size: int | None = None

    def __post_init__(self):
        if self.campaign not in CAMPAIGNS:
            raise ConfigError(f"campaign: unknown value {self.campaign!r}; choose from {sorted(CAMPAIGNS)}")
        defaults = _DEFAULTS[self.campaign]
        for key, val in defaults.items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, val)
        checks = {
            "trials": self.trials >= 1, "lam": self.lam > 0, "tau": self.tau > 1,
            "eps": self.eps > 0, "max_iter": self.max_iter >= 1, "noise": self.noise >= 0,
            "c": self.c > 0, "delta": 0 < self.delta < 1, "jl_eps": 0 < self.jl_eps < 1,
            "rate": 0 < self.rate <= 1,
        }
        for field in ("d", "n", "k", "m"):
            val = getattr(self, field)
            checks[field] = val is None or val >= 1
        for field, ok in checks.items():
            if not ok:
                raise ConfigError(f"{field}: invalid value {getattr(self, field)!r}")
        try:
            JlDistribution(self.dist)
        except ValueError:
            raise ConfigError(f"dist: unknown value {self.dist!r}") from None


_DEFAULTS: dict[str, dict[str, Any]] = {
    "lemma1": dict(trials=100, d=6, n=10),
    "theorem1": dict(trials=50, d=6, n=8),
    "rma": dict(trials=25, d=6, n=8, k=6, k0=2),
    "rdr": dict(trials=25, d=6, n=8, m=4),
    "halko": dict(trials=100, d=50, n=80, k=10, k0=6),
    "jl": dict(trials=10_000, m=128),
    "product": dict(trials=500, m=64),
}


def binomial_slack(p: float, trials: int) -> float:
    """Three standard deviations of an empirical frequency with mean p."""
    return 3.0 * math.sqrt(p * (1 - p) / trials) if trials else math.inf


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("L0PROX_THREADS", "1")))
    except ValueError:
        raise ConfigError("L0PROX_THREADS must be an integer") from None


def _instance(cfg: CampaignConfig, seed: int):
    data = generate(cfg.d, cfg.n, cfg.profile, seed, rate=cfg.rate, k_star=min(cfg.k_star, cfg.n),
                    noise=cfg.noise)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return normalize_instance(data.dictionary, data.signal, cfg.lam, cfg.tau)


def _opts(cfg: CampaignConfig) -> PgdOptions:
    return PgdOptions(max_iter=cfg.max_iter, eps=cfg.eps)


def _f(v) -> float | None:
    v = float(v)
    return v if math.isfinite(v) else None


def _trial_lemma1(cfg: CampaignConfig, seed: int) -> dict:
    inst = _instance(cfg, seed)
    z0 = ista_init(inst)
    out = {"seed": seed, "support_growth": False, "non_decrease": False}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = pgd_solve(inst, z0, _opts(cfg))
    except SupportGrowthDetected:
        out["support_growth"] = True
        return out
    except NonDecreaseDetected:
        out["non_decrease"] = True
        return out
    z = rep.code
    fp = float(np.linalg.norm(z - pgd_map(inst, z, rep.s_used))) if math.isfinite(rep.s_used) else 0.0
    oracle = brute_force_global(inst, cfg.max_support_size)
    b_max = b_feasible_interval(z, oracle.code, inst)
    local = None
    if b_max is not None and math.isfinite(b_max):
        local = local_solution_residual(z, inst, b_max / 2)
    out.update(iterations=rep.iterations, terminated_by=rep.terminated_by.value,
               fixed_point_residual=fp, local_residual=local,
               b_max=_f(b_max) if b_max is not None else None,
               objective=rep.objective, oracle_objective=oracle.objective)
    return out


def _cert_summary(cert) -> dict:
    return {
        "assumptions_ok": cert.assumptions_ok,
        "holds": cert.holds,
        "violated": cert.violated,
        "bound": _f(cert.bound_value),
        "gap": _f(cert.actual_gap),
        "event_holds": cert.event_holds,
        "failed_assumptions": sorted(k for k, v in cert.assumptions.items() if not v),
    }


def _trial_theorem1(cfg: CampaignConfig, seed: int) -> dict:
    inst = _instance(cfg, seed)
    rep = pgd_solve(inst, ista_init(inst), _opts(cfg))
    oracle = brute_force_global(inst, cfg.max_support_size)
    cert = theorem1_bound(rep.code, oracle.code, inst, ties=oracle.tie_codes)
    return {"seed": seed, "certificate": _cert_summary(cert), "ties": len(oracle.ties),
            "same_support": rep.support == oracle.support}


def _trial_rma(cfg: CampaignConfig, seed: int) -> dict:
    inst = _instance(cfg, seed)
    sketch = range_finder(inst.dictionary, cfg.k, seed)
    z0 = rma_ista_init(inst, sketch)
    rep = pgd_rma_solve(inst, cfg.k, seed, z0, _opts(cfg), sketch=sketch)
    z_star = brute_force_global(inst, cfg.max_support_size)
    z_tilde = brute_force_global(inst.with_data(sketch.dense()), cfg.max_support_size)
    cert = rma_gap_bounds(rep.code, z_tilde.code, z_star.code, inst, sketch, cfg.k0, z0)
    return {"seed": seed, "certificate": _cert_summary(cert),
            "parts": {k: _cert_summary(v) for k, v in cert.parts.items()},
            "objective_original": rep.info["original_objective"], "oracle_objective": z_star.objective}


def _trial_rdr(cfg: CampaignConfig, seed: int) -> dict:
    inst = _instance(cfg, seed)
    transform = sample_jl(cfg.m, inst.d, cfg.dist, seed)
    reduced = reduce_instance(inst, transform)
    z0 = rdr_ista_init(reduced)
    rep = pgd_rdr_solve(inst, cfg.m, cfg.dist, seed, z0, _opts(cfg), transform=transform)
    z_star = brute_force_global(inst, cfg.max_support_size)
    z_bar = brute_force_global(reduced.unscaled(), cfg.max_support_size)
    cert = rdr_gap_bounds(rep.code, z_bar.code, z_star.code, inst, transform, z0, cfg.c, cfg.delta)
    return {"seed": seed, "certificate": _cert_summary(cert),
            "parts": {k: _cert_summary(v) for k, v in cert.parts.items()},
            "objective_original": rep.info["original_objective"], "oracle_objective": z_star.objective}


def _halko_dictionary(cfg: CampaignConfig) -> np.ndarray:
    return generate(cfg.d, cfg.n, "geometric_decay", cfg.seed, rate=cfg.rate).dictionary


def _trial_halko(cfg: CampaignConfig, seed: int) -> dict:
    D = _halko_dictionary(cfg)
    sketch = range_finder(D, cfg.k, seed)
    err = float(np.linalg.norm(D - sketch.dense(), 2))
    C = halko_error_constant(D, cfg.k, cfg.k0)
    return {"seed": seed, "error": err, "constant": C, "failed": bool(err > C)}


TRIALS: dict[str, Callable[[CampaignConfig, int], dict]] = {
    "lemma1": _trial_lemma1,
    "theorem1": _trial_theorem1,
    "rma": _trial_rma,
    "rdr": _trial_rdr,
    "halko": _trial_halko,
}
CAMPAIGNS = set(TRIALS) | {"jl", "product"}


def _call(args):
    name, cfg, seed = args
    return TRIALS[name](cfg, seed)


def _run_trials(cfg: CampaignConfig) -> list[dict]:
    seeds = [cfg.seed + i for i in range(cfg.trials)]
    jobs = [(cfg.campaign, cfg, s) for s in seeds]
    workers = worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_call, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_call(j) for j in jobs]
    return sorted(results, key=lambda r: r["seed"])


def _ratio_quantiles(trials: list[dict], key="certificate") -> dict:
    ratios = [t[key]["gap"] / t[key]["bound"] for t in trials
              if t[key]["assumptions_ok"] and t[key]["bound"] and t[key]["gap"] is not None]
    if not ratios:
        return {}
    q = np.quantile(ratios, [0.0, 0.5, 0.9, 1.0])
    return dict(zip(("min", "median", "p90", "max"), map(float, q)))


def _aggregate_lemma1(cfg, trials) -> dict:
    growth = sum(t["support_growth"] for t in trials)
    nondec = sum(t["non_decrease"] for t in trials)
    done = [t for t in trials if "fixed_point_residual" in t]
    fp_bad = sum(t["fixed_point_residual"] > FIXED_POINT_TOL for t in done)
    skipped = sum(t["local_residual"] is None for t in done)
    local_bad = sum(t["local_residual"] is not None and t["local_residual"] > LOCAL_TOL for t in done)
    dominance = sum(t["oracle_objective"] > t["objective"] + 1e-12 for t in done)
    violations = growth + nondec + fp_bad + local_bad + dominance
    return {
        "support_growth": growth, "non_decrease": nondec, "fixed_point_failures": fp_bad,
        "local_residual_failures": local_bad, "local_residual_skipped": skipped,
        "oracle_dominance_failures": dominance,
        "max_fixed_point_residual": max((t["fixed_point_residual"] for t in done), default=0.0),
        "deterministic_violations": violations, "passed": violations == 0,
    }


def _aggregate_theorem1(cfg, trials) -> dict:
    binding = [t for t in trials if t["certificate"]["assumptions_ok"]]
    viol = sum(t["certificate"]["violated"] for t in trials)
    return {
        "binding": len(binding), "assumption_rate": len(binding) / len(trials),
        "deterministic_violations": viol, "gap_bound_ratio": _ratio_quantiles(trials),
        "passed": viol == 0,
    }


def _aggregate_randomized(cfg, trials, failure_prob: float) -> dict:
    det = 0
    for t in trials:
        det += t["parts"]["reduced"]["violated"]
        for key in ("optimal", "certificate"):
            c = t["parts"][key] if key == "optimal" else t[key]
            det += bool(c["violated"] and c["event_holds"])
    binding = [t for t in trials if t["certificate"]["assumptions_ok"]]
    stat_fail = sum(not t["certificate"]["holds"] for t in binding)
    rate = stat_fail / len(binding) if binding else 0.0
    slack = binomial_slack(failure_prob, len(binding))
    return {
        "binding": len(binding), "assumption_rate": len(binding) / len(trials),
        "reduced_binding": sum(t["parts"]["reduced"]["assumptions_ok"] for t in trials),
        "deterministic_violations": det, "statistical_failures": stat_fail,
        "statistical_failure_rate": rate, "allowed_failure_rate": failure_prob + slack,
        "event_rate": sum(bool(t["certificate"]["event_holds"]) for t in trials) / len(trials),
        "gap_bound_ratio": _ratio_quantiles(trials),
        "passed": det == 0 and rate <= failure_prob + slack,
    }


def _aggregate_halko(cfg, trials) -> dict:
    failures = sum(t["failed"] for t in trials)
    rate = failures / len(trials)
    return {"failures": failures, "failure_rate": rate, "allowed_failure_rate": 0.06,
            "bound_failure_probability": 6 * math.exp(-(cfg.k - cfg.k0)),
            "constant": trials[0]["constant"], "max_error": max(t["error"] for t in trials),
            "deterministic_violations": 0, "passed": rate <= 0.06}


def _run_jl(cfg: CampaignConfig) -> dict:
    v = stream(cfg.seed, 20).standard_normal(cfg.vector_dim)
    rate = jl_failure_rate(v, cfg.m, cfg.jl_eps, cfg.dist, cfg.trials, cfg.seed)
    return {"failure_rate": rate, "allowed_failure_rate": 0.05, "deterministic_violations": 0,
            "passed": rate <= 0.05}


def _run_product(cfg: CampaignConfig) -> dict:
    A = stream(cfg.seed, 21).standard_normal((10, 30))
    B = stream(cfg.seed, 22).standard_normal((30, 10))
    try:
        rate = product_projection_check(A, B, cfg.dist, cfg.m, cfg.c, cfg.delta, cfg.trials, cfg.seed)
    except HypothesisError as err:
        raise ConfigError(f"m: {err}") from None
    rate, allowed = float(rate), cfg.delta + 0.03
    return {"failure_rate": rate, "allowed_failure_rate": allowed, "deterministic_violations": 0,
            "passed": rate <= allowed}


def run_campaign(cfg: CampaignConfig) -> dict:
    """Run the configured campaign and return its numerical payload."""
    if cfg.campaign == "jl":
        return {"summary": _run_jl(cfg)}
    if cfg.campaign == "product":
        return {"summary": _run_product(cfg)}
    trials = _run_trials(cfg)
    if cfg.campaign == "lemma1":
        summary = _aggregate_lemma1(cfg, trials)
    elif cfg.campaign == "theorem1":
        summary = _aggregate_theorem1(cfg, trials)
    elif cfg.campaign == "rma":
        summary = _aggregate_randomized(cfg, trials, 6 * math.exp(-(cfg.k - cfg.k0)))
    elif cfg.campaign == "rdr":
        summary = _aggregate_randomized(cfg, trials, cfg.delta)
    else:
        summary = _aggregate_halko(cfg, trials)
    return {"summary": summary, "trials": trials}
