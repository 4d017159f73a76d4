"""Counter-based random streams.

Every random draw in the package comes from a Philox-4x64 generator keyed by
(seed, stream index), so a draw depends only on those two integers and not on
what else was sampled before.  Gaussian variates use the inverse normal CDF of
53-bit uniforms rather than a rejection sampler, keeping the mapping from raw
counter output to values fixed.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1


class Stream:
    def __init__(self, seed: int, index: int = 0):
        key = np.array([int(seed) & _MASK64, int(index) & _MASK64], dtype=np.uint64)
        self.bitgen = np.random.Philox(key=key)

    def _raw(self, size) -> np.ndarray:
        count = int(np.prod(size)) if np.ndim(size) else int(size)
        return self.bitgen.random_raw(count).reshape(size)

    def uniform(self, size) -> np.ndarray:
        """Uniforms on the open interval (0, 1)."""
        return ((self._raw(size) >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def standard_normal(self, size) -> np.ndarray:
        return ndtri(self.uniform(size))

    def signs(self, size) -> np.ndarray:
        bits = self._raw(size) >> np.uint64(63)
        return 1.0 - 2.0 * bits.astype(np.float64)

    def integers(self, high: int, size) -> np.ndarray:
        return np.minimum((self.uniform(size) * high).astype(np.int64), high - 1)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")


def stream(seed: int, index: int = 0) -> Stream:
    return Stream(seed, index)
