"""Shared fixtures: the He three-level model, seeded generators and random systems."""

import numpy as np
import pytest

from omega.process import generate_random_model, perturb_state
from omega.reference import he_model
from omega.space import spectral_decompose


@pytest.fixture
def he():
    return he_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_system():
    """Factory returning (H, spec) for a seeded random model."""

    def build(seed, dim=5, min_gap=0.1, spread=10.0):
        H = generate_random_model(dim, seed, min_gap, spread)
        return H, spectral_decompose(H)

    return build


@pytest.fixture
def near_eigenvectors():
    """Factory returning approximants of the lowest ``count`` eigenvectors."""

    def build(spec, rng, angle, count):
        return tuple(perturb_state(spec.state(i), rng, angle) for i in range(count))

    return build
