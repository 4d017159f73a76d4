import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from l0prox.core import normalize_instance
from l0prox.synth import generate

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def make_instance(d, n, seed, lam=0.05, profile="planted_sparse", k_star=2, noise=0.05, tau=1.1):
    data = generate(d, n, profile, seed, k_star=k_star, noise=noise)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return normalize_instance(data.dictionary, data.signal, lam, tau)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
