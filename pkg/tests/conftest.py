"""Shared fixtures.

The synthetic dataset fixtures are session-scoped: generation plus
feature extraction is the slow part of the suite, and every consumer
treats the results as read-only.
"""

import numpy as np
import pytest

from stressfuse import PipelineConfig, generate_synthetic
from stressfuse.eval import prepare_table


@pytest.fixture(scope="session")
def records3():
    """Three subjects, 400 s each — small but fully separable."""
    return generate_synthetic(3, 400, seed=7)


@pytest.fixture(scope="session")
def config3():
    return PipelineConfig(n_classes=3, fusion="kalman")


@pytest.fixture(scope="session")
def table3(records3, config3):
    return prepare_table(records3, config3)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
