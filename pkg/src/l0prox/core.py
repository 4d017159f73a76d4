"""Problem representation and the dense linear algebra shared by the solvers.

The l0-penalized least squares problem is

    min_z  L(z) = ||x - D z||_2^2 + lam * ||z||_0

with a d x n dictionary D.  Solvers and bounds assume the normalized regime
max_i ||D^i||_2 <= 1 and ||x||_2 <= 1, which `normalize_instance` enforces.
Vectors and matrices are plain float64 numpy arrays; a sparse code is a
length-n array whose support is the set of its exactly-nonzero entries.
"""
from __future__ import annotations

import dataclasses
import warnings
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "L0ProxError", "InvalidData", "DimensionError", "InvalidInit",
    "NonDecreaseDetected", "SupportGrowthDetected", "ConfigError",
    "HypothesisError", "RefuseEnumeration",
    "ProblemInstance", "IterationRecord", "QRResult",
    "normalize_instance", "denormalize_code", "support", "objective",
    "thin_qr", "singular_values", "sigma_min", "sigma_max",
    "spectral_norm", "least_squares_on_support",
]

SIGMA_RTOL = 1e-10


class L0ProxError(Exception):
    """Base class for all errors raised by this package."""


class InvalidData(L0ProxError, ValueError):
    pass


class DimensionError(L0ProxError, ValueError):
    pass


class InvalidInit(L0ProxError, ValueError):
    pass


class ConfigError(L0ProxError, ValueError):
    pass


class HypothesisError(L0ProxError, ValueError):
    """A mathematical hypothesis of a bound or lemma is violated."""


class RefuseEnumeration(L0ProxError, ValueError):
    pass


class NonDecreaseDetected(L0ProxError, RuntimeError):
    """The sufficient-decrease inequality failed during a lemma1-mode run."""


class SupportGrowthDetected(L0ProxError, RuntimeError):
    """An iterate gained a nonzero outside the previous support."""


@dataclasses.dataclass(frozen=True)
class ProblemInstance:
    """A normalized problem.

    `scale_factor` is the dictionary divisor m and `signal_scale` the signal
    divisor; a code z for this instance corresponds to the raw code
    ``z * signal_scale / scale_factor`` (see `denormalize_code`).
    """

    dictionary: np.ndarray
    signal: np.ndarray
    lam: float
    tau: float = 1.1
    scale_factor: float = 1.0
    signal_scale: float = 1.0
    zero_columns: tuple[int, ...] = ()

    def __post_init__(self):
        D = np.asarray(self.dictionary, dtype=float)
        x = np.asarray(self.signal, dtype=float)
        if D.ndim != 2 or D.shape[0] < 1 or D.shape[1] < 1:
            raise DimensionError(f"dictionary must be a nonempty matrix, got shape {D.shape}")
        if x.shape != (D.shape[0],):
            raise DimensionError(f"signal has shape {x.shape}, expected ({D.shape[0]},)")
        if not (np.all(np.isfinite(D)) and np.all(np.isfinite(x))):
            raise InvalidData("dictionary and signal must be finite")
        if not self.lam > 0:
            raise InvalidData(f"lam must be positive, got {self.lam}")
        if not self.tau > 1:
            raise InvalidData(f"tau must exceed 1, got {self.tau}")
        if not (self.scale_factor > 0 and self.signal_scale > 0):
            raise InvalidData("scale factors must be positive")
        D = D.copy()
        x = x.copy()
        D.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "dictionary", D)
        object.__setattr__(self, "signal", x)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def d(self) -> int:
        return self.dictionary.shape[0]

    @property
    def n(self) -> int:
        return self.dictionary.shape[1]

    @property
    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.dictionary, axis=0)

    def with_data(self, dictionary, signal=None) -> "ProblemInstance":
        """Same penalty parameters, different data (used for sketched problems)."""
        return dataclasses.replace(
            self, dictionary=dictionary,
            signal=self.signal if signal is None else signal,
            scale_factor=1.0, signal_scale=1.0, zero_columns=(),
        )


@dataclasses.dataclass(frozen=True)
class IterationRecord:
    t: int
    objective: float
    support_size: int
    step_norm: float


def normalize_instance(D_raw, x_raw, lam: float, tau: float = 1.1) -> ProblemInstance:
    """Scale D and x into the unit-norm regime.

    The dictionary is divided by m = max_i ||D^i||_2 * (1 + 1e-9) when some
    column exceeds unit norm (m = 1 otherwise), and the signal by
    max(1, ||x||_2).  Zero columns are kept and reported with a warning so
    that support indices stay aligned with the raw dictionary.

    ``lam`` is the penalty of the *scaled* problem; the denormalized codes
    solve the raw problem with penalty ``lam * signal_scale**2``.
    """
    D_raw = np.asarray(D_raw, dtype=float)
    x_raw = np.asarray(x_raw, dtype=float)
    if D_raw.ndim != 2 or D_raw.size == 0:
        raise DimensionError(f"dictionary must be a nonempty matrix, got shape {D_raw.shape}")
    if x_raw.ndim == 2 and x_raw.shape[1] == 1:
        x_raw = x_raw[:, 0]
    if not (np.all(np.isfinite(D_raw)) and np.all(np.isfinite(x_raw))):
        raise InvalidData("non-finite entries in dictionary or signal")

    norms = np.linalg.norm(D_raw, axis=0)
    zero_cols = tuple(int(j) for j in np.flatnonzero(norms == 0))
    if zero_cols:
        warnings.warn(f"dictionary columns {list(zero_cols)} are zero and unusable", stacklevel=2)
    max_norm = float(norms.max())
    m = max_norm * (1 + 1e-9) if max_norm > 1 else 1.0
    x_norm = float(np.linalg.norm(x_raw))
    a = max(1.0, x_norm)
    return ProblemInstance(D_raw / m, x_raw / a, lam, tau,
                           scale_factor=m, signal_scale=a, zero_columns=zero_cols)


def denormalize_code(instance: ProblemInstance, z) -> np.ndarray:
    """Map a code of the scaled problem back to the raw dictionary."""
    z = np.asarray(z, dtype=float)
    return z * (instance.signal_scale / instance.scale_factor)


def support(z) -> tuple[int, ...]:
    return tuple(int(j) for j in np.flatnonzero(np.asarray(z)))


def _check_code(instance: ProblemInstance, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (instance.n,):
        raise DimensionError(f"code has shape {z.shape}, expected ({instance.n},)")
    return z


def objective(instance: ProblemInstance, z) -> float:
    """L(z) = ||x - D z||^2 + lam * |supp(z)|."""
    z = _check_code(instance, z)
    r = instance.signal - instance.dictionary @ z
    return float(r @ r) + instance.lam * np.count_nonzero(z)


class QRResult(NamedTuple):
    q: np.ndarray
    r: np.ndarray
    rank_deficient: bool


def thin_qr(A) -> QRResult:
    """Householder thin QR of a d x k matrix with d >= k.

    Householder Q is orthonormal even when A is rank deficient, in which case
    its trailing columns complete an orthonormal basis of some k-dimensional
    space containing range(A).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError("thin_qr expects a matrix")
    d, k = A.shape
    if d < k:
        raise DimensionError(f"thin_qr needs d >= k, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidData("non-finite entries in thin_qr input")
    q, r = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diag(r))
    scale = diag.max() if diag.size else 0.0
    rank_deficient = bool(scale == 0 or np.any(diag <= SIGMA_RTOL * scale))
    return QRResult(q, r, rank_deficient)


def singular_values(A) -> np.ndarray:
    """All singular values in descending order (zeros included)."""
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise InvalidData("non-finite entries")
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def sigma_max(A) -> float:
    s = singular_values(A)
    return float(s[0]) if s.size else 0.0


def sigma_min(A) -> float:
    """Smallest singular value above 1e-10 * sigma_max (0.0 for a zero matrix)."""
    s = singular_values(A)
    if s.size == 0 or s[0] == 0:
        return 0.0
    return float(s[s > SIGMA_RTOL * s[0]][-1])


def full_column_rank(A) -> bool:
    A = np.asarray(A, dtype=float)
    if A.shape[1] == 0:
        return True
    if A.shape[1] > A.shape[0]:
        return False
    s = singular_values(A)
    return bool(s[0] > 0 and s[-1] > SIGMA_RTOL * s[0])


def spectral_norm(A, n_iter: int = 100, tol: float = 1e-8, seed: int = 0) -> float:
    """||A||_2 by power iteration on A^T A.

    Stops when the relative change of the estimate falls below `tol`.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0 or not np.any(A):
        return 0.0
    from .rng import stream

    v = stream(seed, 0xA11CE).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(n_iter):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        new = float(np.sqrt(nw))
        if abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return float(np.linalg.norm(A @ v))


def least_squares_on_support(instance: ProblemInstance, S: Sequence[int]) -> tuple[np.ndarray, bool]:
    """Minimizer of ||x - D_S z_S|| supported on S, plus a rank-deficiency flag.

    Rank-deficient D_S yields the minimum-norm (pseudo-inverse) solution.
    """
    S = list(S)
    z = np.zeros(instance.n)
    if not S:
        return z, False
    DS = instance.dictionary[:, S]
    coef, _, rank, _ = np.linalg.lstsq(DS, instance.signal, rcond=None)
    z[S] = coef
    return z, bool(rank < len(S))
