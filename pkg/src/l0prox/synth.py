"""Seeded synthetic dictionaries and signals."""
from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .core import ConfigError
from .rng import stream

__all__ = ["Profile", "SyntheticData", "generate", "random_orthonormal"]

# stream indices reserved for data generation
_DICT_STREAM = 10
_CODE_STREAM = 11
_NOISE_STREAM = 12
_SIGNAL_STREAM = 13


class Profile(str, enum.Enum):
    FLAT = "flat"
    GEOMETRIC_DECAY = "geometric_decay"
    PLANTED_SPARSE = "planted_sparse"


@dataclasses.dataclass(frozen=True)
class SyntheticData:
    dictionary: np.ndarray
    signal: np.ndarray
    z_true: np.ndarray | None = None


def random_orthonormal(rows: int, cols: int, st) -> np.ndarray:
    """rows x cols matrix with orthonormal columns, Haar distributed."""
    g = st.standard_normal((rows, cols))
    q, r = np.linalg.qr(g)
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def _unit_columns(G: np.ndarray) -> np.ndarray:
    return G / np.linalg.norm(G, axis=0)


def generate(d: int, n: int, profile="flat", seed: int = 0, rate: float = 0.5,
             k_star: int = 3, noise: float = 0.0) -> SyntheticData:
    """Draw (D, x) for the given profile.

    flat: unit-norm Gaussian columns and a unit-norm Gaussian signal.
    geometric_decay: D = U diag(rate^j) V^T with Haar factors.
    planted_sparse: unit-norm Gaussian columns, z_true with k_star nonzeros of
    magnitude in [0.5, 1] and random sign, x = D z_true + noise * g.
    """
    try:
        profile = Profile(profile)
    except ValueError:
        raise ConfigError(f"unknown profile {profile!r}") from None
    if d < 1 or n < 1:
        raise ConfigError("d and n must be positive")
    st = stream(seed, _DICT_STREAM)
    if profile is Profile.GEOMETRIC_DECAY:
        if not 0 < rate <= 1:
            raise ConfigError("rate must lie in (0, 1]")
        r = min(d, n)
        U = random_orthonormal(d, r, st)
        V = random_orthonormal(n, r, st)
        D = (U * rate ** np.arange(r)) @ V.T
        x = stream(seed, _SIGNAL_STREAM).standard_normal(d)
        return SyntheticData(D, x / np.linalg.norm(x))
    D = _unit_columns(st.standard_normal((d, n)))
    if profile is Profile.FLAT:
        x = stream(seed, _SIGNAL_STREAM).standard_normal(d)
        return SyntheticData(D, x / np.linalg.norm(x))
    if not 0 <= k_star <= n:
        raise ConfigError("k_star must lie in [0, n]")
    if noise < 0:
        raise ConfigError("noise must be nonnegative")
    cs = stream(seed, _CODE_STREAM)
    idx = np.sort(cs.permutation(n)[:k_star])
    z = np.zeros(n)
    z[idx] = (0.5 + 0.5 * cs.uniform(k_star)) * cs.signs(k_star)
    x = D @ z + noise * stream(seed, _NOISE_STREAM).standard_normal(d)
    return SyntheticData(D, x, z)
