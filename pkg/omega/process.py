"""Generate model Hamiltonians and trial states for experiments."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from omega.errors import ConfigError, InvalidParameters
from omega.space import DEGENERACY_GUARD, StateVector, SymmetricOperator

logger = logging.getLogger(__name__)

SPEC_KEYS = {"dim": "dim", "seed": "seed", "min-gap": "min_gap", "spread": "spread"}


@dataclass(frozen=True)
class RandomModelSpec:
    """
    Recipe for a seeded random Hamiltonian.

    Parameters
    ----------
    dim : int
        Hilbert-space dimension, at least 2.
    seed : int
        Seed of the generator.
    min_gap : float
        Smallest allowed gap between adjacent eigenvalues.
    spread : float
        Distance between the lowest and highest eigenvalue.

    """

    dim: int = 6
    seed: int = 0
    min_gap: float = 0.1
    spread: float = 10.0

    def __post_init__(self):
        validate_model_params(self.dim, self.min_gap, self.spread)

    @classmethod
    def parse(cls, text: str) -> "RandomModelSpec":
        """
        Read ``dim=<n>,seed=<s>,min-gap=<g>,spread=<r>``; missing keys keep defaults.

        Examples
        --------
        >>> RandomModelSpec.parse("dim=4,seed=7")
        RandomModelSpec(dim=4, seed=7, min_gap=0.1, spread=10.0)

        """
        values: Dict[str, object] = {}
        for item in filter(None, (part.strip() for part in text.split(","))):
            key, sep, raw = item.partition("=")
            key = key.strip().lower().replace("_", "-")
            if not sep or key not in SPEC_KEYS:
                raise ConfigError(f"Unknown random-model field '{item}'; expected dim, seed, min-gap, spread.")
            try:
                values[SPEC_KEYS[key]] = int(raw) if key in ("dim", "seed") else float(raw)
            except ValueError as err:
                raise ConfigError(f"Random-model field '{key}' has a bad value '{raw}'.") from err
        try:
            return cls(**values)
        except InvalidParameters as err:
            raise ConfigError(str(err)) from err

    def to_dict(self) -> Dict[str, object]:
        return {"dim": self.dim, "seed": self.seed, "min_gap": self.min_gap, "spread": self.spread}


def validate_model_params(dim: int, min_gap: float, spread: float) -> None:
    if dim < 2:
        raise InvalidParameters(f"dim must be at least 2, got {dim}.")
    if not np.isfinite(min_gap) or min_gap <= DEGENERACY_GUARD:
        raise InvalidParameters(f"min_gap must exceed {DEGENERACY_GUARD}, got {min_gap!r}.")
    if not np.isfinite(spread) or spread < min_gap * (dim - 1):
        raise InvalidParameters(f"spread {spread!r} cannot hold {dim - 1} gaps of at least {min_gap!r}.")


def sample_spectrum(rng: np.random.Generator, dim: int, min_gap: float, spread: float) -> np.ndarray:
    """
    Ascending eigenvalues centred on zero, adjacent gaps at least ``min_gap``.

    The spread left over after the minimal gaps is shared among the gaps
    with Dirichlet weights.
    """
    slack = spread - min_gap * (dim - 1)
    gaps = min_gap + slack * rng.dirichlet(np.ones(dim - 1))
    return -spread / 2.0 + np.concatenate([[0.0], np.cumsum(gaps)])


def random_orthogonal(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix from a QR factorization with sign-fixed R."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def generate_random_model(dim: int, seed: int, min_gap: float = 0.1, spread: float = 10.0) -> SymmetricOperator:
    """
    Seeded random Hamiltonian with a prescribed spectrum.

    Parameters
    ----------
    dim : int
        Dimension, at least 2.
    seed : int
        Generator seed; equal seeds give bit-identical matrices.
    min_gap : float
        Minimal adjacent eigenvalue gap, above the degeneracy guard.
    spread : float
        Width of the spectrum.

    Returns
    -------
    SymmetricOperator

    Raises
    ------
    InvalidParameters
        If the parameters cannot define a non-degenerate spectrum.

    Examples
    --------
    >>> H = generate_random_model(dim=3, seed=1)
    >>> H.dim
    3

    """
    H, _ = generate_random_model_with_spectrum(dim, seed, min_gap, spread)
    return H


def generate_random_model_with_spectrum(
    dim: int, seed: int, min_gap: float = 0.1, spread: float = 10.0
) -> Tuple[SymmetricOperator, np.ndarray]:
    """Like :func:`generate_random_model`, also returning the sampled eigenvalues."""
    validate_model_params(dim, min_gap, spread)
    rng = np.random.default_rng(seed)
    energies = sample_spectrum(rng, dim, min_gap, spread)
    q = random_orthogonal(rng, dim)
    entries = (q * energies) @ q.T
    logger.debug(f"   > Random model dim={dim}, seed={seed}, spectrum {energies[0]:.4f}..{energies[-1]:.4f}.")
    return SymmetricOperator((entries + entries.T) / 2.0), energies


def model_from_spec(spec: RandomModelSpec) -> SymmetricOperator:
    return generate_random_model(spec.dim, spec.seed, spec.min_gap, spec.spread)


def perturb_state(state: StateVector, rng: np.random.Generator, angle: float) -> StateVector:
    """
    Rotate ``state`` by ``angle`` toward a random orthogonal direction.

    Returns cos(angle) state + sin(angle) u with u a uniform unit vector
    orthogonal to ``state``.
    """
    x = state.components
    u = rng.standard_normal(x.shape[0])
    u -= (x @ u) * x
    u /= np.linalg.norm(u)
    return StateVector.normalized(np.cos(angle) * x + np.sin(angle) * u)


def perturb_toward(state: StateVector, target: StateVector, angle: float) -> StateVector:
    """Rotate ``state`` by ``angle`` toward the part of ``target`` orthogonal to it."""
    x = state.components
    u = target.components - (x @ target.components) * x
    u /= np.linalg.norm(u)
    return StateVector.normalized(np.cos(angle) * x + np.sin(angle) * u)


def approximants_near(
    eigenvectors: List[StateVector], rng: np.random.Generator, angle: float, count: int
) -> List[StateVector]:
    """Perturb each of the first ``count`` eigenvectors by ``angle``."""
    return [perturb_state(eigenvectors[i], rng, angle) for i in range(count)]
