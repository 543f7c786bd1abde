"""Tests for the builtin models."""

import numpy as np
import pytest

from omega.errors import ConfigError, InvalidParameters
from omega.reference import HE_ENERGIES, builtin_models, demonstration_start, get_builtin, he_model
from omega.space import energy


def test_he_model(he):
    assert he.name == "he-model"
    assert tuple(he.spec.energies) == HE_ENERGIES
    states = he.named_states()
    assert sorted(states) == ["phi0", "phi1", "psi0", "psi1", "psi2"]
    assert energy(he.H, states["phi1"]) == pytest.approx(-2.146, abs=1e-12)


def test_he_model_epsilon():
    model = he_model(epsilon=0.05)
    assert energy(model.H, model.phi1) == pytest.approx(-2.196, abs=1e-12)
    assert model.phi1.components[1] == 0.0


def test_demonstration_start():
    start = demonstration_start()
    assert start.components == pytest.approx([0.3, np.sqrt(1 - 0.09 - 0.25), -0.5])
    with pytest.raises(InvalidParameters):
        demonstration_start(0.8, 0.7)


def test_builtin_registry():
    assert list(builtin_models()) == ["he-model"]
    assert get_builtin("he-model").H.dim == 3
    with pytest.raises(ConfigError):
        get_builtin("h2-model")
