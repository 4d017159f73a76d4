"""Proximal gradient descent with hard thresholding for l0 least squares.

One iteration is a gradient step on Q(z) = ||x - Dz||^2 with step 2/(tau*s)
followed by the l0 proximal map, which is hard thresholding at
sqrt(2*lam/(tau*s)).  With the lemma1 step size and an initial code whose
residual norm is at most one, the support can only shrink and the objective
decreases by at least (tau-1)*s/2 * ||z_t - z_{t-1}||^2 per step; both facts
are checked at every iteration in that mode.
"""
from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from typing import Sequence

import numpy as np

from .core import (
    ConfigError, DimensionError, InvalidInit, IterationRecord, NonDecreaseDetected,
    ProblemInstance, SupportGrowthDetected, full_column_rank, sigma_max, support,
)

__all__ = [
    "StepMode", "Termination", "PgdOptions", "SolveReport", "DenseModel",
    "hard_threshold", "soft_threshold", "step_size_lemma1", "lipschitz_step",
    "gradient_step", "proximal_map", "prox_threshold", "ista_init", "pgd_solve",
    "pgd_map",
]

DECREASE_SLACK = 1e-10
INIT_SLACK = 1e-9


class StepMode(str, enum.Enum):
    LEMMA1 = "lemma1"
    LIPSCHITZ = "lipschitz"
    MANUAL = "manual"


class Termination(str, enum.Enum):
    OBJECTIVE_CONVERGED = "ObjectiveConverged"
    ITERATE_CONVERGED = "IterateConverged"
    MAX_ITER = "MaxIter"


@dataclasses.dataclass(frozen=True)
class PgdOptions:
    max_iter: int = 100_000
    eps: float = 1e-12
    step_mode: StepMode = StepMode.LEMMA1
    s: float | None = None          # only for StepMode.MANUAL
    s_margin: float = 1.01
    polish: bool = True
    keep_iterates: bool = False

    def __post_init__(self):
        object.__setattr__(self, "step_mode", StepMode(self.step_mode))
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if not self.s_margin > 1:
            raise ConfigError("s_margin must exceed 1")
        if self.step_mode is StepMode.MANUAL and not (self.s is not None and self.s > 0):
            raise ConfigError("manual step mode needs a positive s")


@dataclasses.dataclass
class SolveReport:
    code: np.ndarray
    objective: float
    trace: list[IterationRecord]
    terminated_by: Termination
    s_used: float
    support_shrank_every_step: bool
    polished: bool = False
    iterates: list[np.ndarray] | None = None
    notes: list[str] = dataclasses.field(default_factory=list)
    info: dict = dataclasses.field(default_factory=dict)

    @property
    def support(self) -> tuple[int, ...]:
        return support(self.code)

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1


class DenseModel:
    """Q(z) = ||x - D z||^2 with an explicit dictionary."""

    def __init__(self, D, x):
        self.D = np.asarray(D, dtype=float)
        self.x = np.asarray(x, dtype=float)

    @property
    def n(self) -> int:
        return self.D.shape[1]

    def restrict(self, cols) -> "DenseModel":
        return DenseModel(self.D[:, cols], self.x)

    def residual_sq(self, z) -> float:
        r = self.x - self.D @ z
        return float(r @ r)

    def grad_half(self, z) -> np.ndarray:
        """D^T (D z - x), i.e. half the gradient of Q, via two mat-vecs."""
        return self.D.T @ (self.D @ z - self.x)

    def grad_half_many(self, Z) -> np.ndarray:
        """grad_half applied to each column of Z."""
        return self.D.T @ (self.D @ Z - self.x[:, None])

    def residual_sq_many(self, Z) -> np.ndarray:
        R = self.x[:, None] - self.D @ Z
        return np.einsum("ij,ij->j", R, R)

    def gram(self, cols) -> tuple[np.ndarray, np.ndarray]:
        """(D_S^T D_S, D_S^T x)."""
        DS = self.D[:, cols]
        return DS.T @ DS, DS.T @ self.x

    def lstsq(self, cols) -> np.ndarray:
        return np.linalg.lstsq(self.D[:, cols], self.x, rcond=None)[0]

    def lstsq_correction(self, cols, zS) -> np.ndarray:
        """Minimum-norm d with D_S d = D_S z_S - x in the least-squares sense."""
        DS = self.D[:, cols]
        return np.linalg.lstsq(DS, DS @ zS - self.x, rcond=None)[0]

    def full_rank(self, cols) -> bool:
        return full_column_rank(self.D[:, cols])

    def sigma_max(self) -> float:
        return sigma_max(self.D)

    def max_column_norm(self) -> float:
        return float(np.linalg.norm(self.D, axis=0).max()) if self.n else 0.0


def hard_threshold(u, theta: float) -> np.ndarray:
    """Zero the entries with |u_j| < theta; entries at exactly theta are kept."""
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < theta, 0.0, u)


def soft_threshold(u, theta: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.maximum(np.abs(u) - theta, 0.0)


def step_size_lemma1(support_size: int, lam: float, tau: float, margin: float = 1.01) -> float:
    """margin * max{2|S|, 2(1 + lam|S|)/(lam tau)}."""
    if support_size < 0 or not lam > 0 or not tau > 1 or not margin > 1:
        raise ConfigError("need support_size >= 0, lam > 0, tau > 1, margin > 1")
    if support_size == 0:
        warnings.warn("empty initial support: PGD iterates stay at zero", stacklevel=2)
    return margin * max(2.0 * support_size, 2.0 * (1.0 + lam * support_size) / (lam * tau))


def lipschitz_step(D) -> float:
    """2 * sigma_max(D)^2, the Lipschitz constant of grad Q."""
    return 2.0 * sigma_max(D) ** 2


def prox_threshold(lam: float, tau: float, s: float) -> float:
    return math.sqrt(2.0 * lam / (tau * s))


def gradient_step(instance: ProblemInstance, z, s: float) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (instance.n,):
        raise DimensionError(f"code has shape {z.shape}, expected ({instance.n},)")
    if not s > 0:
        raise ConfigError("s must be positive")
    D, x = instance.dictionary, instance.signal
    return z - (2.0 / (instance.tau * s)) * (D.T @ (D @ z - x))


def proximal_map(z_tilde, lam: float, tau: float, s: float) -> np.ndarray:
    return hard_threshold(z_tilde, prox_threshold(lam, tau, s))


def pgd_map(instance: ProblemInstance, z, s: float) -> np.ndarray:
    """One full PGD iteration: prox(gradient_step(z))."""
    return proximal_map(gradient_step(instance, z, s), instance.lam, instance.tau, s)


def _ista(model, lam: float, max_iter: int, eps: float) -> np.ndarray:
    n = model.n
    z = np.zeros(n)
    smax = model.sigma_max()
    if smax == 0 or not np.any(model.x):
        return z
    step = 1.0 / (2.0 * smax**2)

    def l1_objective(v):
        return model.residual_sq(v) + lam * float(np.abs(v).sum())

    f = l1_objective(z)
    f0 = f
    for _ in range(max_iter):
        z_new = soft_threshold(z - step * 2.0 * model.grad_half(z), lam * step)
        f_new = l1_objective(z_new)
        if f_new > f:
            # rounding-level increase: keep the monotone iterate
            break
        delta = float(np.linalg.norm(z_new - z))
        z, f = z_new, f_new
        if delta <= eps:
            break
    z[np.abs(z) < 1e-12] = 0.0
    if l1_objective(z) > f0:
        return np.zeros(n)
    return z


def ista_init(instance: ProblemInstance, max_iter: int = 2000, eps: float = 1e-10) -> np.ndarray:
    """Approximate minimizer of ||x - Dz||^2 + lam ||z||_1 used as PGD start.

    Iterative soft thresholding from z = 0 with step 1/(2 sigma_max(D)^2).
    The iteration is monotone, so ||x - D z0||^2 + lam ||z0||_1 <= ||x||^2.
    """
    if max_iter < 1:
        raise ConfigError("max_iter must be >= 1")
    return _ista(DenseModel(instance.dictionary, instance.signal), instance.lam, max_iter, eps)


def _choose_step(model, init, lam, tau, opts: PgdOptions) -> float:
    if opts.step_mode is StepMode.LEMMA1:
        return step_size_lemma1(np.count_nonzero(init), lam, tau, opts.s_margin)
    if opts.step_mode is StepMode.LIPSCHITZ:
        s = 2.0 * model.sigma_max() ** 2
        if s == 0:
            raise ConfigError("Lipschitz step undefined for a zero dictionary")
        return s
    return float(opts.s)


def run_pgd(model, lam: float, tau: float, init, opts: PgdOptions) -> SolveReport:
    """PGD on an abstract least-squares model (dense, sketched or reduced)."""
    n = model.n
    z0 = np.array(init, dtype=float)
    if z0.shape != (n,):
        raise DimensionError(f"init has shape {z0.shape}, expected ({n},)")
    notes: list[str] = []

    if not np.any(model.x):
        # degenerate signal: zero is optimal
        z = np.zeros(n)
        rec = IterationRecord(0, 0.0, 0, 0.0)
        return SolveReport(z, 0.0, [rec], Termination.OBJECTIVE_CONVERGED, float("nan"),
                           True, notes=["zero signal: returned z = 0 without iterating"])

    lemma1 = opts.step_mode is StepMode.LEMMA1
    if lemma1:
        res0 = math.sqrt(model.residual_sq(z0))
        if res0 > 1 + INIT_SLACK:
            raise InvalidInit(f"lemma1 mode needs ||x - D z0|| <= 1, got {res0:.6g}")
        if model.max_column_norm() > 1 + INIT_SLACK:
            raise InvalidInit("lemma1 mode needs dictionary columns of norm <= 1")
        if not np.any(z0):
            notes.append("empty initial support: iterate frozen at zero")
    s = _choose_step(model, z0, lam, tau, opts)
    thr = prox_threshold(lam, tau, s)
    coef = 2.0 / (tau * s)
    decrease = 0.5 * (tau - 1.0) * s

    cols = np.flatnonzero(z0) if lemma1 else np.arange(n)
    sub = model.restrict(cols)
    z = z0[cols].copy()

    def full(v):
        out = np.zeros(n)
        out[cols] = v
        return out

    L_prev = sub.residual_sq(z) + lam * np.count_nonzero(z)
    trace = [IterationRecord(0, L_prev, int(np.count_nonzero(z0)), 0.0)]
    iterates = [z0.copy()] if opts.keep_iterates else None
    shrank = True
    terminated = Termination.MAX_ITER
    stepper = _AffineStepper(sub, coef, thr)
    block = _MIN_BLOCK
    stable = 0
    t = 0

    def accept(z_new, L, step, t) -> Termination | None:
        if lemma1 and L > L_prev - decrease * step**2 + DECREASE_SLACK:
            raise NonDecreaseDetected(
                f"iteration {t}: L={L!r} exceeds {L_prev!r} - {decrease * step**2!r}")
        trace.append(IterationRecord(t, L, int(np.count_nonzero(z_new)), step))
        if iterates is not None:
            iterates.append(full(z_new))
        if step <= opts.eps:
            return Termination.ITERATE_CONVERGED
        if abs(L - L_prev) <= opts.eps * max(1.0, L_prev):
            return Termination.OBJECTIVE_CONVERGED
        return None

    while t < opts.max_iter:
        if stable >= 2 and np.any(z):
            Z = stepper.advance(z, min(block, opts.max_iter - t))
            if Z.shape[1]:
                Ls = sub.residual_sq_many(Z) + lam * np.count_nonzero(z)
                Lp = np.concatenate([[L_prev], Ls[:-1]])
                steps = np.linalg.norm(np.diff(np.column_stack([z, Z]), axis=1), axis=0)
                if lemma1:
                    bad = np.flatnonzero(Ls > Lp - decrease * steps**2 + DECREASE_SLACK)
                    if bad.size:
                        j = int(bad[0])
                        raise NonDecreaseDetected(
                            f"iteration {t + j + 1}: L={Ls[j]!r} exceeds "
                            f"{Lp[j]!r} - {decrease * steps[j]**2!r}")
                conv_it = steps <= opts.eps
                conv_obj = np.abs(Ls - Lp) <= opts.eps * np.maximum(1.0, Lp)
                fired = np.flatnonzero(conv_it | conv_obj)
                count = int(fired[0]) + 1 if fired.size else Z.shape[1]
                size = int(np.count_nonzero(z))
                trace.extend(IterationRecord(t + j + 1, float(Ls[j]), size, float(steps[j]))
                             for j in range(count))
                if iterates is not None:
                    iterates.extend(full(Z[:, j]) for j in range(count))
                t += count
                z = Z[:, count - 1].copy()
                L_prev = float(Ls[count - 1])
                if fired.size:
                    j = int(fired[0])
                    terminated = (Termination.ITERATE_CONVERGED if conv_it[j]
                                  else Termination.OBJECTIVE_CONVERGED)
                    break
                block = min(2 * block, _MAX_BLOCK) if count == block else _MIN_BLOCK
                if t >= opts.max_iter:
                    break
        t += 1
        z_new = hard_threshold(z - coef * sub.grad_half(z), thr)
        grew = np.any((z_new != 0) & (z == 0))
        if grew:
            shrank = False
            if lemma1:
                raise SupportGrowthDetected(f"support grew at iteration {t}")
        same = np.array_equal(z_new != 0, z != 0)
        stable = stable + 1 if same else 0
        if not same:
            block = _MIN_BLOCK
        step = float(np.linalg.norm(z_new - z))
        L = sub.residual_sq(z_new) + lam * np.count_nonzero(z_new)
        stop = accept(z_new, L, step, t)
        z, L_prev = z_new, L
        if stop:
            terminated = stop
            break

    polished = False
    if opts.polish:
        z_pol = _polish(sub, z, lam, coef, thr)
        if z_pol is not None:
            z, polished = z_pol, True
            L_prev = sub.residual_sq(z) + lam * np.count_nonzero(z)
    return SolveReport(full(z), L_prev, trace, terminated, s, shrank,
                       polished=polished, iterates=iterates, notes=notes)


_MIN_BLOCK = 16
_MAX_BLOCK = 4096


class _AffineStepper:
    """Blocks of PGD iterations while the support stays fixed.

    On a fixed support S the iteration is z <- z - c (G z - h) with
    G = D_S^T D_S and h = D_S^T x, so with G = V diag(g) V^T the t-th iterate
    has eigen-coordinates r^t e_0 + (1 - r^t)/(c g) c h~, r = 1 - c g.  A block
    is accepted only up to the first iterate at which the true map (gradient
    step on all columns, then thresholding) would change the support.
    """

    def __init__(self, model, coef: float, thr: float):
        self.model = model
        self.coef = coef
        self.thr = thr
        self._cache: dict[bytes, tuple] = {}

    def _eig(self, mask: np.ndarray):
        key = np.packbits(mask).tobytes()
        if key not in self._cache:
            cols = np.flatnonzero(mask)
            G, h = self.model.gram(cols)
            g, V = np.linalg.eigh(G)
            g = np.maximum(g, 0.0)
            self._cache = {key: (cols, V, 1.0 - self.coef * g, V.T @ (self.coef * h), g)}
        return self._cache[key]

    def advance(self, z: np.ndarray, count: int) -> np.ndarray:
        """Up to `count` further iterates as columns; possibly none."""
        mask = z != 0
        cols, V, rho, hv, g = self._eig(mask)
        j = np.arange(1, count + 1, dtype=float)
        P = rho[:, None] ** j[None, :]
        cg = self.coef * g
        with np.errstate(divide="ignore", invalid="ignore"):
            geo = np.where(cg[:, None] > 0, (1.0 - P) / cg[:, None], j[None, :])
        E = P * (V.T @ z[cols])[:, None] + geo * hv[:, None]
        Z = np.zeros((z.size, count))
        Z[cols] = V @ E
        prev = np.column_stack([z, Z[:, :-1]])
        U = prev - self.coef * self.model.grad_half_many(prev)
        ok = np.all(np.abs(U[mask]) >= self.thr, axis=0) & np.all(np.abs(U[~mask]) < self.thr, axis=0)
        ok &= np.all(np.abs(Z[cols]) >= self.thr, axis=0)
        scale = max(1.0, float(np.abs(z).max()))
        ok &= np.max(np.abs(U[mask] - Z[cols]), axis=0) <= 1e-9 * scale
        bad = np.flatnonzero(~ok)
        keep = int(bad[0]) if bad.size else count
        return Z[:, :keep]


def _polish(sub, z, lam, coef, thr):
    """Exact limit point on the final support, or None.

    On a fixed support the iteration is gradient descent on a convex
    quadratic with step below 1/||G||, so it tends to z - G^+(G z - h): the
    component of z in the null space of G = D_S^T D_S is kept and the rest
    jumps to the least-squares fit.  The limit is accepted only if it is a
    fixed point of the PGD map with the same support.
    """
    S = np.flatnonzero(z)
    if S.size == 0:
        return None
    z_lim = np.zeros_like(z)
    z_lim[S] = z[S] - sub.lstsq_correction(S, z[S])
    if np.any(z_lim[S] == 0):
        return None
    mapped = hard_threshold(z_lim - coef * sub.grad_half(z_lim), thr)
    if not np.array_equal(mapped != 0, z_lim != 0):
        return None
    if sub.residual_sq(z_lim) > sub.residual_sq(z):
        return None
    return z_lim


def pgd_solve(instance: ProblemInstance, init, opts: PgdOptions | None = None) -> SolveReport:
    """Run PGD on the instance from `init`.

    In lemma1 mode the computation is restricted to the columns in the
    initial support, raising InvalidInit when ||x - D init|| > 1 and
    SupportGrowthDetected / NonDecreaseDetected if the lemma's conclusions
    fail along the way.
    """
    opts = opts or PgdOptions()
    model = DenseModel(instance.dictionary, instance.signal)
    return run_pgd(model, instance.lam, instance.tau, init, opts)


def replay_pgd_map(instance: ProblemInstance, iterates: Sequence[np.ndarray], s: float) -> float:
    """Largest deviation between recorded iterates and the full (unrestricted) PGD map."""
    worst = 0.0
    for prev, cur in zip(iterates[:-1], iterates[1:]):
        worst = max(worst, float(np.max(np.abs(pgd_map(instance, prev, s) - cur), initial=0.0)))
    return worst
