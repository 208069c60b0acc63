import hypothesis
import numpy as np
import pytest

from feedback_kmeans import Dataset, build_oracle_profile, demo_generator_config, generate, standardize

hypothesis.settings.register_profile("package", deadline=None)
hypothesis.settings.load_profile("package")


@pytest.fixture
def two_blobs() -> Dataset:
    """Two well-separated Gaussian blobs in 2-d with hidden labels."""
    rng = np.random.default_rng(123)
    a = rng.normal([0.0, 0.0], 0.5, size=(60, 2))
    b = rng.normal([10.0, 10.0], 0.5, size=(40, 2))
    return Dataset(
        points=np.vstack([a, b]),
        feature_names=("x", "y"),
        hidden_segment=np.array([0] * 60 + [1] * 40),
    )


@pytest.fixture(scope="session")
def planted_small():
    """Small planted four-segment dataset (standardized) plus its oracle."""
    config = demo_generator_config(n_points=2000, seed=3)
    dataset, _ = standardize(generate(config))
    profile = build_oracle_profile(config, rng_seed=11)
    return dataset, profile

