"""Command-line front end: ``l0prox gen|solve|verify|bench``.

Options come from built-in defaults, then an optional ``--config`` JSON file,
then explicit flags, later sources winning.  Reports are JSON documents with
``schema: 1``; everything under ``payload`` is a deterministic function of the
config, while wall-clock numbers live under ``timings``.

Exit codes: 0 success, 1 a binding deterministic certificate was violated,
2 invalid input or a solver precondition failed.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchConfig, run_bench
from .campaigns import CampaignConfig, run_campaign
from .core import ConfigError, L0ProxError, denormalize_code, normalize_instance
from .pgd import PgdOptions, ista_init, pgd_solve
from .randomized import (
    identity_transform, pgd_rdr_solve, pgd_rma_solve, range_finder, rdr_ista_init, reduce_instance,
    rma_ista_init, sample_jl,
)
from .synth import generate

SCHEMA = 1
EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2


class IoError(L0ProxError, OSError):
    pass


# --- file formats ------------------------------------------------------------

def read_matrix(path) -> np.ndarray:
    try:
        A = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as err:
        raise IoError(f"cannot read {path}: {err}") from None
    except ValueError as err:
        raise ConfigError(f"{path}: not a headerless numeric CSV ({err})") from None
    return A


def read_vector(path) -> np.ndarray:
    A = read_matrix(path)
    if A.shape[1] != 1 and A.shape[0] != 1:
        raise ConfigError(f"{path}: expected a single-column CSV, got shape {A.shape}")
    return A.ravel()


def write_matrix(path: Path, A) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    try:
        np.savetxt(path, A, delimiter=",", fmt="%.17g")
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from None


def write_vector(path: Path, v) -> None:
    write_matrix(path, np.asarray(v, dtype=float).reshape(-1, 1))


def _out_dir(path) -> Path | None:
    if path is None:
        return None
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise IoError(f"cannot create {out}: {err}") from None
    return out


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2)


def _emit_report(report: dict, out: Path | None, name: str) -> None:
    text = dumps(report) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    try:
        (out / name).write_text(text)
    except OSError as err:
        raise IoError(f"cannot write {out / name}: {err}") from None


# --- config merging ----------------------------------------------------------

def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as err:
        raise IoError(f"cannot read config {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path}: invalid JSON ({err})") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _merged(args, keys) -> dict:
    """Config-file values overridden by explicitly given flags."""
    cfg = _load_config(args.config)
    unknown = set(cfg) - set(keys)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown config field")
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _build(cls, values: dict):
    try:
        return cls(**values)
    except TypeError as err:
        raise ConfigError(str(err)) from None


# --- commands ----------------------------------------------------------------

GEN_KEYS = ("d", "n", "profile", "rate", "k_star", "noise", "seed")


def cmd_gen(args) -> int:
    cfg = {"d": 8, "n": 12, "profile": "flat", "rate": 0.5, "k_star": 3, "noise": 0.0, "seed": 0}
    cfg.update(_merged(args, GEN_KEYS))
    data = generate(**cfg)
    out = _out_dir(args.out or ".")
    write_matrix(out / "D.csv", data.dictionary)
    write_vector(out / "x.csv", data.signal)
    if data.z_true is not None:
        write_vector(out / "z_true.csv", data.z_true)
    print(f"wrote {data.dictionary.shape[0]}x{data.dictionary.shape[1]} dictionary to {out}")
    return EXIT_OK


@dataclasses.dataclass(frozen=True)
class SolveConfig:
    dictionary: str
    signal: str
    lam: float = 0.05
    tau: float = 1.1
    solver: str = "pgd"
    step_mode: str = "lemma1"
    s: float | None = None
    eps: float = 1e-12
    max_iter: int = 100_000
    k: int | None = None
    m: int | None = None
    dist: str = "gaussian"
    seed: int = 0
    init: str = "ista"

    def __post_init__(self):
        if self.solver not in ("pgd", "rma", "rdr"):
            raise ConfigError(f"solver: unknown value {self.solver!r}")
        if self.solver == "rma" and self.k is None:
            raise ConfigError("k: required for the rma solver")
        if self.solver == "rdr" and self.m is None:
            raise ConfigError("m: required for the rdr solver")
        if not self.lam > 0:
            raise ConfigError(f"lam: must be positive, got {self.lam}")
        if not self.tau > 1:
            raise ConfigError(f"tau: must exceed 1, got {self.tau}")
        if self.dist == "identity" and self.solver != "rdr":
            raise ConfigError("dist: identity is only meaningful for the rdr solver")


SOLVE_KEYS = tuple(f.name for f in dataclasses.fields(SolveConfig))


def _init_code(cfg: SolveConfig, inst, sketch=None, reduced=None) -> np.ndarray:
    if cfg.init == "ista":
        if sketch is not None:
            return rma_ista_init(inst, sketch)
        if reduced is not None:
            return rdr_ista_init(reduced)
        return ista_init(inst)
    if cfg.init == "zero":
        return np.zeros(inst.n)
    z = read_vector(cfg.init)
    # user-supplied starts refer to the raw dictionary
    return z * inst.scale_factor / inst.signal_scale


def cmd_solve(args) -> int:
    values = _merged(args, SOLVE_KEYS)
    for key in ("dictionary", "signal"):
        if key not in values:
            raise ConfigError(f"{key}: required")
    cfg = _build(SolveConfig, values)
    D, x = read_matrix(cfg.dictionary), read_vector(cfg.signal)
    inst = normalize_instance(D, x, cfg.lam, cfg.tau)
    opts = PgdOptions(max_iter=cfg.max_iter, eps=cfg.eps, step_mode=cfg.step_mode, s=cfg.s)
    timings = {}
    t0 = time.perf_counter()
    if cfg.solver == "pgd":
        rep = pgd_solve(inst, _init_code(cfg, inst), opts)
    elif cfg.solver == "rma":
        s0 = time.perf_counter()
        sketch = range_finder(inst.dictionary, cfg.k, cfg.seed)
        timings["sketch_seconds"] = time.perf_counter() - s0
        rep = pgd_rma_solve(inst, cfg.k, cfg.seed, _init_code(cfg, inst, sketch=sketch), opts,
                            sketch=sketch)
    else:
        s0 = time.perf_counter()
        if cfg.dist == "identity":
            # exact bypass: T = I, so the run must match plain PGD
            if cfg.m != inst.d:
                raise ConfigError(f"m: the identity transform needs m = d = {inst.d}")
            transform = identity_transform(inst.d)
        else:
            transform = sample_jl(cfg.m, inst.d, cfg.dist, cfg.seed)
        reduced = reduce_instance(inst, transform)
        timings["sketch_seconds"] = time.perf_counter() - s0
        rep = pgd_rdr_solve(inst, cfg.m, cfg.dist, cfg.seed, _init_code(cfg, inst, reduced=reduced),
                            opts, transform=transform)
    timings["total_seconds"] = time.perf_counter() - t0
    if rep.iterations:
        timings["per_iteration_seconds"] = timings["total_seconds"] / rep.iterations

    raw = denormalize_code(inst, rep.code)
    # the given lam applied to the raw data, the value a user would compute by hand
    raw_objective = float(np.sum((x - D @ raw) ** 2) + cfg.lam * np.count_nonzero(raw))
    payload = {
        "solver": cfg.solver,
        "code": rep.code, "raw_code": raw, "support": list(rep.support),
        "objective": rep.objective, "raw_objective": raw_objective,
        "iterations": rep.iterations,
        "terminated_by": rep.terminated_by.value, "s_used": rep.s_used,
        "support_shrank_every_step": rep.support_shrank_every_step,
        "polished": rep.polished, "notes": rep.notes,
        "scale_factor": inst.scale_factor, "signal_scale": inst.signal_scale,
        "zero_columns": list(inst.zero_columns), "info": rep.info,
    }
    report = {"schema": SCHEMA, "version": __version__, "command": "solve",
              "config": dataclasses.asdict(cfg), "seed": cfg.seed, "payload": payload,
              "timings": timings}
    print(f"objective {rep.objective:.12g}  support {list(rep.support)}  "
          f"iterations {rep.iterations}  ({rep.terminated_by.value})", file=sys.stderr)
    out = _out_dir(args.out)
    _emit_report(report, out, "report.json")
    if args.trace:
        path = Path(args.trace) if out is None else out / args.trace
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "objective", "support_size", "step_norm"])
                for r in rep.trace:
                    w.writerow([r.t, repr(r.objective), r.support_size, repr(r.step_norm)])
        except OSError as err:
            raise IoError(f"cannot write {path}: {err}") from None
    return EXIT_OK


VERIFY_KEYS = tuple(f.name for f in dataclasses.fields(CampaignConfig))


def cmd_verify(args) -> int:
    cfg = _build(CampaignConfig, _merged(args, VERIFY_KEYS))
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        payload = run_campaign(cfg)
    report = {"schema": SCHEMA, "version": __version__, "command": "verify",
              "config": dataclasses.asdict(cfg), "seed": cfg.seed, "payload": payload,
              "timings": {"total_seconds": time.perf_counter() - t0}}
    summary = payload["summary"]
    print(f"{cfg.campaign}: " + ", ".join(f"{k}={v}" for k, v in sorted(summary.items())
                                          if not isinstance(v, dict)), file=sys.stderr)
    _emit_report(report, _out_dir(args.out), f"verify_{cfg.campaign}.json")
    return EXIT_VIOLATION if summary["deterministic_violations"] else EXIT_OK


BENCH_KEYS = tuple(f.name for f in dataclasses.fields(BenchConfig))


def cmd_bench(args) -> int:
    cfg = _build(BenchConfig, _merged(args, BENCH_KEYS))
    payload, timings = run_bench(cfg)
    report = {"schema": SCHEMA, "version": __version__, "command": "bench",
              "config": dataclasses.asdict(cfg), "seed": cfg.seed, "payload": payload,
              "timings": timings}
    base = timings["pgd"]["median_seconds"]
    for name, entry in timings.items():
        if isinstance(entry, dict):
            flag = "  (unreliable: below 100 us)" if entry["unreliable"] else ""
            print(f"{name:>10}  {entry['median_seconds'] * 1e6:10.1f} us  "
                  f"x{base / entry['median_seconds']:.1f}{flag}", file=sys.stderr)
    _emit_report(report, _out_dir(args.out), "bench.json")
    return EXIT_OK


# --- argument parsing --------------------------------------------------------

def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="l0prox", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option values")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory (reports go to stdout if omitted)")

    g = sub.add_parser("gen", help="write a synthetic D.csv / x.csv pair")
    common(g)
    g.add_argument("--d", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--profile", choices=["flat", "geometric_decay", "planted_sparse"])
    g.add_argument("--rate", type=float)
    g.add_argument("--k-star", dest="k_star", type=int)
    g.add_argument("--noise", type=float)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run PGD, PGD-RMA or PGD-RDR on CSV data")
    common(s)
    s.add_argument("--dictionary", "-D")
    s.add_argument("--signal", "-x")
    s.add_argument("--lam", type=float)
    s.add_argument("--tau", type=float)
    s.add_argument("--solver", choices=["pgd", "rma", "rdr"])
    s.add_argument("--step-mode", dest="step_mode", choices=["lemma1", "lipschitz", "manual"])
    s.add_argument("--s", type=float, help="step parameter for --step-mode manual")
    s.add_argument("--eps", type=float)
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--dist", choices=["gaussian", "sign", "database_friendly", "identity"])
    s.add_argument("--init", help="ista (default), zero, or a CSV path with a raw code")
    s.add_argument("--trace", help="write the iteration table to this CSV file")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="run a seeded bound-verification campaign")
    common(v)
    v.add_argument("--campaign", choices=["lemma1", "theorem1", "rma", "rdr", "halko", "jl", "product"])
    v.add_argument("--trials", type=int)
    for name, typ in (("d", int), ("n", int), ("rate", float), ("noise", float), ("lam", float),
                      ("tau", float), ("eps", float), ("k", int), ("k0", int), ("m", int),
                      ("c", float), ("delta", float)):
        v.add_argument(f"--{name}", type=typ)
    v.add_argument("--profile", choices=["flat", "planted_sparse"])
    v.add_argument("--k-star", dest="k_star", type=int)
    v.add_argument("--max-iter", dest="max_iter", type=int)
    v.add_argument("--dist", choices=["gaussian", "sign", "database_friendly"])
    v.add_argument("--jl-eps", dest="jl_eps", type=float)
    v.add_argument("--vector-dim", dest="vector_dim", type=int)
    v.add_argument("--max-support-size", dest="max_support_size", type=int)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="time gradient steps of the three solvers")
    common(b)
    b.add_argument("--d", type=int)
    b.add_argument("--n", type=int)
    b.add_argument("--ks", type=_int_list, help="comma-separated sketch ranks")
    b.add_argument("--ms", type=_int_list, help="comma-separated reduced dimensions")
    b.add_argument("--iters", type=int)
    b.add_argument("--lam", type=float)
    b.add_argument("--dist", choices=["gaussian", "sign", "database_friendly"])
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except L0ProxError as err:
        print(f"l0prox: error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
