import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


def mc_z(sample, expected):
    """z-score of a sample mean against its expectation."""
    sample = np.asarray(sample, dtype=float)
    return (sample.mean() - expected) / (sample.std(ddof=1) / np.sqrt(sample.size))


def batch_se(x, batches=50):
    """Batch-means standard error of the mean of a correlated series."""
    x = np.asarray(x, dtype=float)
    m = x.size // batches
    means = x[: m * batches].reshape(batches, m).mean(axis=1)
    return means.std(ddof=1) / np.sqrt(batches)
