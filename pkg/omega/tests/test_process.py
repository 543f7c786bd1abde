"""Tests for random model generation and state perturbation."""

import numpy as np
import pytest

from omega.errors import ConfigError, InvalidParameters
from omega.process import (
    RandomModelSpec,
    approximants_near,
    generate_random_model,
    generate_random_model_with_spectrum,
    model_from_spec,
    perturb_state,
    perturb_toward,
    random_orthogonal,
    sample_spectrum,
)
from omega.space import StateVector, spectral_decompose


@pytest.mark.parametrize("dim", [2, 3, 7, 12])
def test_random_model_has_requested_spectrum(dim):
    H, energies = generate_random_model_with_spectrum(dim, seed=dim)
    spec = spectral_decompose(H)
    assert spec.energies == pytest.approx(energies, abs=1e-10)
    assert energies[-1] - energies[0] == pytest.approx(10.0)
    assert np.all(np.diff(energies) >= 0.1 - 1e-12)


def test_random_model_is_seeded():
    first = generate_random_model(6, seed=42)
    second = generate_random_model(6, seed=42)
    third = generate_random_model(6, seed=43)
    assert np.array_equal(first.entries, second.entries)
    assert not np.array_equal(first.entries, third.entries)


@pytest.mark.parametrize(
    "dim,min_gap,spread",
    [(1, 0.1, 10.0), (4, 0.0, 10.0), (4, 1e-9, 10.0), (6, 1.0, 4.0), (3, 0.1, np.nan)],
)
def test_random_model_rejects_bad_parameters(dim, min_gap, spread):
    with pytest.raises(InvalidParameters):
        generate_random_model(dim, 0, min_gap, spread)


def test_sample_spectrum_tight():
    rng = np.random.default_rng(0)
    energies = sample_spectrum(rng, 5, 1.0, 4.0)
    assert np.diff(energies) == pytest.approx([1.0] * 4)
    assert energies[0] == -2.0


def test_random_orthogonal():
    q = random_orthogonal(np.random.default_rng(5), 6)
    assert np.allclose(q.T @ q, np.eye(6), atol=1e-12)


def test_random_model_spec_parse():
    spec = RandomModelSpec.parse("dim=6,seed=42,min-gap=0.2,spread=12")
    assert spec == RandomModelSpec(dim=6, seed=42, min_gap=0.2, spread=12.0)
    assert RandomModelSpec.parse("seed=3") == RandomModelSpec(seed=3)
    assert spec.to_dict() == {"dim": 6, "seed": 42, "min_gap": 0.2, "spread": 12.0}
    assert np.array_equal(model_from_spec(spec).entries, generate_random_model(6, 42, 0.2, 12.0).entries)


@pytest.mark.parametrize("text", ["dim=6,colour=red", "dim", "dim=six", "dim=1", "min-gap=0"])
def test_random_model_spec_errors(text):
    with pytest.raises(ConfigError):
        RandomModelSpec.parse(text)


def test_perturb_state_angle(rng):
    state = StateVector.normalized(rng.standard_normal(5))
    for angle in (0.0, 0.1, 0.7):
        perturbed = perturb_state(state, rng, angle)
        assert perturbed.overlap(state) == pytest.approx(np.cos(angle), abs=1e-12)


def test_perturb_toward():
    state = StateVector.basis(3, 0)
    target = StateVector.normalized([1.0, 0.0, 1.0])
    perturbed = perturb_toward(state, target, 0.2)
    assert perturbed.components == pytest.approx([np.cos(0.2), 0.0, np.sin(0.2)])


def test_approximants_near(random_system, rng):
    _, spec = random_system(2, dim=4)
    states = approximants_near(spec.eigenvectors, rng, 0.1, 2)
    assert len(states) == 2
    for i, state in enumerate(states):
        assert state.overlap(spec.state(i)) == pytest.approx(np.cos(0.1), abs=1e-12)
