"""Randomized accelerations of PGD.

PGD-RMA replaces D by the rank-k projection Q Q^T D = Q W, where Q spans the
range of D times a Gaussian test matrix, so a gradient step costs O(nk) after
Q^T x is cached.  PGD-RDR runs PGD on (T x, T D) for a random m x d transform
T with i.i.d. entries of unit variance scaled by 1/sqrt(m).
"""
from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from .core import (
    ConfigError, DimensionError, ProblemInstance, full_column_rank, objective,
    sigma_max, spectral_norm, thin_qr,
)
from .pgd import DenseModel, PgdOptions, SolveReport, _ista, run_pgd
from .rng import stream

__all__ = [
    "JlDistribution", "JlTransform", "SketchedDictionary", "SketchModel",
    "ReducedInstance", "sample_gaussian_sketch", "sample_jl", "range_finder",
    "rma_gradient_step", "reduce_instance", "pgd_rma_solve", "pgd_rdr_solve",
    "rma_ista_init", "rdr_ista_init", "identity_transform",
]

# stream indices, so that sketches drawn for different purposes never overlap
OMEGA_STREAM = 1
JL_STREAM = 2


class JlDistribution(str, enum.Enum):
    GAUSSIAN = "gaussian"
    SIGN = "sign"
    DATABASE_FRIENDLY = "database_friendly"


def _parse_dist(dist) -> JlDistribution:
    try:
        return JlDistribution(dist)
    except ValueError:
        raise ConfigError(f"unknown JL distribution {dist!r}; "
                          f"choose from {[d.value for d in JlDistribution]}") from None


@dataclasses.dataclass(frozen=True)
class JlTransform:
    t: np.ndarray
    distribution: str
    m: int
    seed: int | None

    def apply(self, v) -> np.ndarray:
        return self.t @ np.asarray(v, dtype=float)


@dataclasses.dataclass(frozen=True)
class SketchedDictionary:
    q: np.ndarray
    w: np.ndarray
    k: int
    seed: int
    rank_deficient: bool = False

    def dense(self) -> np.ndarray:
        """D~ = Q W."""
        return self.q @ self.w


@dataclasses.dataclass(frozen=True)
class ReducedInstance:
    """(T x, T D) wrapped as a problem instance.

    If T D has a column of norm above one, `base.dictionary` is T D divided by
    `column_scale` (codes of `base` are then `column_scale` times codes of
    the unscaled reduced problem).
    """

    base: ProblemInstance
    transform: JlTransform
    column_scale: float = 1.0

    @property
    def dictionary(self) -> np.ndarray:
        """D-bar = T D, unscaled."""
        return self.base.dictionary * self.column_scale

    @property
    def signal(self) -> np.ndarray:
        return self.base.signal

    def unscaled(self) -> ProblemInstance:
        return self.base.with_data(self.dictionary, self.signal)


def sample_gaussian_sketch(n: int, k: int, seed: int) -> np.ndarray:
    """n x k matrix of i.i.d. N(0, 1) entries, a pure function of seed."""
    if k < 1 or n < 1:
        raise ConfigError("sketch dimensions must be positive")
    return stream(seed, OMEGA_STREAM).standard_normal((n, k))


def sample_jl(m: int, d: int, dist, seed: int) -> JlTransform:
    """T = T'/sqrt(m) with T' entries Gaussian, +-1, or {+-sqrt3 w.p. 1/6, 0 w.p. 2/3}."""
    if m < 1 or d < 1:
        raise ConfigError("JL dimensions must be positive")
    dist = _parse_dist(dist)
    st = stream(seed, JL_STREAM)
    if dist is JlDistribution.GAUSSIAN:
        tp = st.standard_normal((m, d))
    elif dist is JlDistribution.SIGN:
        tp = st.signs((m, d))
    else:
        u = st.uniform((m, d))
        tp = np.where(u < 1 / 6, math.sqrt(3.0), np.where(u >= 5 / 6, -math.sqrt(3.0), 0.0))
    return JlTransform(tp / math.sqrt(m), dist.value, m, seed)


def identity_transform(d: int) -> JlTransform:
    """T = I_d: the reduction pipeline without randomness, an exact bypass."""
    return JlTransform(np.eye(d), "identity", d, None)


def range_finder(D, k: int, seed: int) -> SketchedDictionary:
    """Q from the thin QR of D @ Omega, W = Q^T D."""
    D = np.asarray(D, dtype=float)
    d, n = D.shape
    if not 1 <= k <= min(d, n):
        raise ConfigError(f"sketch rank k={k} must lie in [1, min(d, n)={min(d, n)}]")
    omega = sample_gaussian_sketch(n, k, seed)
    q, _, deficient = thin_qr(D @ omega)
    return SketchedDictionary(q, q.T @ D, k, seed, deficient)


class SketchModel:
    """Q~(z) = ||x - Q W z||^2 evaluated in O(nk) per call.

    With Q orthonormal, ||x - QWz||^2 = ||x||^2 - ||Q^T x||^2 + ||Q^T x - W z||^2.
    """

    def __init__(self, w, qtx, x_norm_sq: float, wtqtx=None, x=None):
        self.w = w
        self.qtx = qtx
        self.perp = max(0.0, x_norm_sq - float(qtx @ qtx))
        self.x_norm_sq = x_norm_sq
        self.wtqtx = w.T @ qtx if wtqtx is None else wtqtx
        self.x = x if x is not None else qtx

    @classmethod
    def from_sketch(cls, sketch: SketchedDictionary, x) -> "SketchModel":
        x = np.asarray(x, dtype=float)
        return cls(sketch.w, sketch.q.T @ x, float(x @ x), x=x)

    @property
    def n(self) -> int:
        return self.w.shape[1]

    def restrict(self, cols) -> "SketchModel":
        return SketchModel(self.w[:, cols], self.qtx, self.x_norm_sq, self.wtqtx[cols], self.x)

    def residual_sq(self, z) -> float:
        r = self.qtx - self.w @ z
        return self.perp + float(r @ r)

    def grad_half(self, z) -> np.ndarray:
        return self.w.T @ (self.w @ z) - self.wtqtx

    def grad_half_many(self, Z) -> np.ndarray:
        return self.w.T @ (self.w @ Z) - self.wtqtx[:, None]

    def residual_sq_many(self, Z) -> np.ndarray:
        R = self.qtx[:, None] - self.w @ Z
        return self.perp + np.einsum("ij,ij->j", R, R)

    def gram(self, cols) -> tuple[np.ndarray, np.ndarray]:
        WS = self.w[:, cols]
        return WS.T @ WS, self.wtqtx[cols]

    def lstsq(self, cols) -> np.ndarray:
        return np.linalg.lstsq(self.w[:, cols], self.qtx, rcond=None)[0]

    def lstsq_correction(self, cols, zS) -> np.ndarray:
        WS = self.w[:, cols]
        return np.linalg.lstsq(WS, WS @ zS - self.qtx, rcond=None)[0]

    def full_rank(self, cols) -> bool:
        return full_column_rank(self.w[:, cols])

    def sigma_max(self) -> float:
        return sigma_max(self.w)

    def max_column_norm(self) -> float:
        return float(np.linalg.norm(self.w, axis=0).max()) if self.n else 0.0


def rma_gradient_step(sketch: SketchedDictionary, x, z, tau: float, s: float) -> np.ndarray:
    """z - 2/(tau s) (W^T Q^T Q W z - W^T Q^T x), never forming a d x n product."""
    z = np.asarray(z, dtype=float)
    if z.shape != (sketch.w.shape[1],) or np.shape(x) != (sketch.q.shape[0],):
        raise DimensionError("inconsistent dimensions for the sketched gradient step")
    model = SketchModel.from_sketch(sketch, x)
    return z - (2.0 / (tau * s)) * model.grad_half(z)


def rma_ista_init(instance: ProblemInstance, sketch: SketchedDictionary,
                  max_iter: int = 2000, eps: float = 1e-10) -> np.ndarray:
    """l1 initializer computed against the sketched dictionary."""
    return _ista(SketchModel.from_sketch(sketch, instance.signal), instance.lam, max_iter, eps)


def pgd_rma_solve(instance: ProblemInstance, k: int, seed: int, init,
                  opts: PgdOptions | None = None, sketch: SketchedDictionary | None = None
                  ) -> SolveReport:
    """PGD on the rank-k sketched problem.

    The lemma1-mode init condition is checked against D~.  Pass `init=None` to
    start from the l1 solution of the sketched problem.
    """
    opts = opts or PgdOptions()
    if sketch is None:
        sketch = range_finder(instance.dictionary, k, seed)
    model = SketchModel.from_sketch(sketch, instance.signal)
    if init is None:
        init = _ista(model, instance.lam, 2000, 1e-10)
    report = run_pgd(model, instance.lam, instance.tau, init, opts)
    resid = spectral_norm(instance.dictionary - sketch.dense(), n_iter=100, tol=1e-8, seed=seed)
    report.info.update(k=k, seed=seed, sketch_residual=resid,
                       original_objective=objective(instance, report.code))
    return report


def reduce_instance(instance: ProblemInstance, transform: JlTransform) -> ReducedInstance:
    D_bar = transform.t @ instance.dictionary
    x_bar = transform.t @ instance.signal
    norms = np.linalg.norm(D_bar, axis=0)
    top = float(norms.max())
    scale = top * (1 + 1e-9) if top > 1 else 1.0
    base = ProblemInstance(D_bar / scale, x_bar, instance.lam, instance.tau)
    return ReducedInstance(base, transform, scale)


def rdr_ista_init(reduced: ReducedInstance, max_iter: int = 2000, eps: float = 1e-10) -> np.ndarray:
    """l1 initializer for the reduced problem, in the original code units."""
    model = DenseModel(reduced.dictionary, reduced.signal)
    return _ista(model, reduced.base.lam, max_iter, eps)


def pgd_rdr_solve(instance: ProblemInstance, m: int, dist, seed: int, init,
                  opts: PgdOptions | None = None, transform: JlTransform | None = None
                  ) -> SolveReport:
    """PGD on (T x, T D).

    The lemma1-mode init condition is evaluated on the reduced data
    ||T x - T D z0||.  Returned codes are in the units of the original
    problem; `init=None` starts from the l1 solution of the reduced problem.
    """
    opts = opts or PgdOptions()
    if transform is None:
        transform = sample_jl(m, instance.d, dist, seed)
    reduced = reduce_instance(instance, transform)
    if init is None:
        init = rdr_ista_init(reduced)
    init = np.asarray(init, dtype=float) * reduced.column_scale
    base = reduced.base
    report = run_pgd(DenseModel(base.dictionary, base.signal), base.lam, base.tau, init, opts)
    c = reduced.column_scale
    report.code = report.code / c
    if report.iterates is not None:
        report.iterates = [z / c for z in report.iterates]
    report.info.update(m=transform.m, dist=transform.distribution, seed=seed, column_scale=c,
                       original_objective=objective(instance, report.code))
    return report
