import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_distribution(rng, num_frames, extended_size):
    """Random strictly-positive distribution lattice."""
    from ctckit import DistributionLattice

    raw = rng.gamma(1.0, 1.0, size=(num_frames, extended_size)) + 1e-6
    return DistributionLattice.from_probs(raw / raw.sum(axis=1, keepdims=True))


def one_hot_distribution(path, extended_size):
    """Exact one-hot lattice following the given column path."""
    from ctckit import DistributionLattice

    probs = np.zeros((len(path), extended_size))
    probs[np.arange(len(path)), list(path)] = 1.0
    return DistributionLattice.from_probs(probs)
