"""Builtin models and named states."""

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from omega.baselines import PathologyParams, make_pathology
from omega.errors import ConfigError, InvalidParameters
from omega.space import SpectralDecomposition, StateVector, SymmetricOperator, spectral_decompose

# Three lowest 1S levels of He (hartree) used by the three-level model.
HE_ENERGIES = (-2.903, -2.146, -2.06)


@dataclass(frozen=True, eq=False)
class BuiltinModel:
    """
    A model Hamiltonian with its exact eigenpairs and named trial states.

    Attributes
    ----------
    name : str
        Registry key.
    H : SymmetricOperator
        The Hamiltonian.
    spec : SpectralDecomposition
        Exact eigenpairs of ``H``.
    phi0 : StateVector
        Ground-state approximant.
    phi1 : StateVector
        State orthogonal to ``phi0`` and to psi_1 with energy E_1 - epsilon.

    """

    name: str
    H: SymmetricOperator
    spec: SpectralDecomposition
    phi0: StateVector
    phi1: StateVector

    def named_states(self) -> Dict[str, StateVector]:
        states = {"phi0": self.phi0, "phi1": self.phi1}
        states.update({f"psi{i}": self.spec.state(i) for i in range(self.spec.dim)})
        return states


def he_model(epsilon: float = 0.0) -> BuiltinModel:
    """
    H = diag(-2.903, -2.146, -2.06) with phi0 = a psi0 + b psi2 and phi1 = b psi0 - a psi2.

    With ``epsilon = 0``, a = 0.9476, b = 0.3194 and E(phi0) = -2.817.
    """
    model = make_pathology(PathologyParams(*HE_ENERGIES, epsilon=epsilon))
    return BuiltinModel(
        name="he-model", H=model.H, spec=spectral_decompose(model.H), phi0=model.phi0, phi1=model.phi1
    )


def demonstration_start(c: float = 0.3, d: float = -0.5) -> StateVector:
    """
    Start c psi0 + d psi2 + sqrt(1 - c^2 - d^2) psi1 for the Omega_1 run on the He model.

    Raises
    ------
    InvalidParameters
        If c^2 + d^2 >= 1.
    """
    rest = 1.0 - c * c - d * d
    if rest <= 0.0:
        raise InvalidParameters(f"c^2 + d^2 = {c * c + d * d!r} leaves no psi1 weight.")
    return StateVector.normalized([c, np.sqrt(rest), d])


def builtin_models() -> Dict[str, Callable[[], BuiltinModel]]:
    return {"he-model": he_model}


def get_builtin(name: str) -> BuiltinModel:
    """Look up a builtin model by name."""
    models = builtin_models()
    if name not in models:
        raise ConfigError(f"Unknown builtin model '{name}'; available: {', '.join(sorted(models))}.")
    return models[name]()
