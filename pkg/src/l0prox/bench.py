"""Per-iteration gradient-step timings for PGD, PGD-RMA and PGD-RDR."""
from __future__ import annotations

import dataclasses
import time

import numpy as np

from .core import ConfigError, normalize_instance
from .pgd import DenseModel
from .randomized import SketchModel, range_finder, reduce_instance, sample_jl
from .synth import generate

__all__ = ["BenchConfig", "run_bench", "time_gradient_steps", "UNRELIABLE_SECONDS"]

UNRELIABLE_SECONDS = 100e-6


@dataclasses.dataclass(frozen=True)
class BenchConfig:
    d: int = 4096
    n: int = 512
    ks: tuple[int, ...] = (8, 16, 32)
    ms: tuple[int, ...] = (256,)
    iters: int = 100
    warmup: int = 5
    seed: int = 0
    lam: float = 0.05
    dist: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "ks", tuple(int(k) for k in self.ks))
        object.__setattr__(self, "ms", tuple(int(m) for m in self.ms))
        if self.d < 1 or self.n < 1:
            raise ConfigError("d, n: must be positive")
        if self.iters < 100:
            raise ConfigError("iters: at least 100 iterations are timed")
        if any(not 1 <= k <= min(self.d, self.n) for k in self.ks):
            raise ConfigError("ks: each k must lie in [1, min(d, n)]")
        if any(m < 1 for m in self.ms):
            raise ConfigError("ms: each m must be positive")


def time_gradient_steps(model, z, coef: float, iters: int, warmup: int) -> np.ndarray:
    """Wall time of each of `iters` calls of z - coef * grad_half(z)."""
    for _ in range(warmup):
        model.grad_half(z)
    out = np.empty(iters)
    for i in range(iters):
        t0 = time.perf_counter()
        _ = z - coef * model.grad_half(z)
        out[i] = time.perf_counter() - t0
    return out


def _entry(samples: np.ndarray) -> dict:
    med = float(np.median(samples))
    return {"median_seconds": med, "unreliable": med < UNRELIABLE_SECONDS}


def run_bench(cfg: BenchConfig) -> tuple[dict, dict]:
    """Return (numerical payload, timings).

    The payload holds the problem description only; all wall-clock numbers go
    in the second dict, since they differ from run to run.
    """
    data = generate(cfg.d, cfg.n, "flat", cfg.seed)
    inst = normalize_instance(data.dictionary, data.signal, cfg.lam)
    z = np.zeros(cfg.n)
    z[:: max(1, cfg.n // 16)] = 1.0
    coef = 0.01
    timings: dict = {}
    t0 = time.perf_counter()
    dense = DenseModel(inst.dictionary, inst.signal)
    timings["pgd"] = _entry(time_gradient_steps(dense, z, coef, cfg.iters, cfg.warmup))
    for k in cfg.ks:
        s0 = time.perf_counter()
        sketch = range_finder(inst.dictionary, k, cfg.seed)
        sk_time = time.perf_counter() - s0
        model = SketchModel.from_sketch(sketch, inst.signal)
        entry = _entry(time_gradient_steps(model, z, coef, cfg.iters, cfg.warmup))
        entry["setup_seconds"] = sk_time
        entry["speedup"] = timings["pgd"]["median_seconds"] / entry["median_seconds"]
        timings[f"rma_k{k}"] = entry
    for m in cfg.ms:
        s0 = time.perf_counter()
        reduced = reduce_instance(inst, sample_jl(m, cfg.d, cfg.dist, cfg.seed))
        setup = time.perf_counter() - s0
        model = DenseModel(reduced.dictionary, reduced.signal)
        entry = _entry(time_gradient_steps(model, z, coef, cfg.iters, cfg.warmup))
        entry["setup_seconds"] = setup
        entry["speedup"] = timings["pgd"]["median_seconds"] / entry["median_seconds"]
        timings[f"rdr_m{m}"] = entry
    timings["total_seconds"] = time.perf_counter() - t0
    payload = {"d": cfg.d, "n": cfg.n, "ks": list(cfg.ks), "ms": list(cfg.ms),
               "iters": cfg.iters, "seed": cfg.seed, "dist": cfg.dist}
    return payload, timings
