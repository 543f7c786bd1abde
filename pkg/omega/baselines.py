"""Comparison constructions: closest orthogonal approximant, HUM roots, degenerate mix, pathology model."""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from omega.errors import InvalidParameters, NonEigenPair, ParallelStates, TargetOutOfRange
from omega.space import (
    PARALLEL_TOL,
    SpectralDecomposition,
    StateVector,
    SymmetricOperator,
    check_dims,
    energy,
    subspace_eigenpairs,
)

logger = logging.getLogger(__name__)

EIGENPAIR_TOL = 1e-10


class ClosestApproximant(NamedTuple):
    """phi_n^+ with its energy from the closed form and from the Rayleigh quotient."""

    state: StateVector
    energy: float
    energy_direct: float


def closest_approximant(spec: SpectralDecomposition, phi0: StateVector, n: int = 1) -> ClosestApproximant:
    """
    The state orthogonal to phi0 with maximal overlap with psi_n.

    Parameters
    ----------
    spec : SpectralDecomposition
        Exact eigenpairs.
    phi0 : StateVector
        Ground-state approximant.
    n : int
        Target level.

    Returns
    -------
    ClosestApproximant
        phi^+ = (psi_n - phi0 <psi_n|phi0>) / sqrt(1 - <psi_n|phi0>^2) and
        E(phi^+) = E_n - (E_n - E(phi0)) s^2 / (1 - s^2), s = <psi_n|phi0>.

    Raises
    ------
    ParallelStates
        If phi0 is parallel to psi_n.

    Examples
    --------
    >>> from omega.reference import he_model
    >>> model = he_model()
    >>> round(closest_approximant(model.spec, model.phi0).energy, 3)
    -2.146

    """
    check_dims(spec.dim, phi0.dim)
    psi_n = spec.state(n)
    s = psi_n.overlap(phi0)
    s2 = s * s
    if s2 >= 1.0 - PARALLEL_TOL:
        raise ParallelStates(f"phi0 is parallel to psi_{n}, overlap {s!r}.")
    state = StateVector.normalized(psi_n.components - s * phi0.components)
    e_n = float(spec.energies[n])
    H = spec_operator(spec)
    closed = e_n - (e_n - energy(H, phi0)) * s2 / (1.0 - s2)
    return ClosestApproximant(state=state, energy=closed, energy_direct=energy(H, state))


def spec_operator(spec: SpectralDecomposition) -> SymmetricOperator:
    """The operator whose spectral decomposition is ``spec``."""
    entries = spec.reconstruct()
    return SymmetricOperator((entries + entries.T) / 2.0)


def hum_roots(H: SymmetricOperator, trial_basis: Sequence[StateVector]) -> np.ndarray:
    """Ascending roots of the secular equation on span(trial_basis); root k bounds E_k from above."""
    values, _ = subspace_eigenpairs(H, trial_basis)
    return values


def degenerate_mix(
    psi_minus: StateVector,
    psi_plus: StateVector,
    e_minus: float,
    e_plus: float,
    e_target: float,
    sign: int = 1,
    H: Optional[SymmetricOperator] = None,
) -> StateVector:
    """
    Combine two orthogonal Ritz vectors into a state of prescribed energy.

    Psi = Psi- sqrt((E+ - E)/(E+ - E-)) + sign * Psi+ sqrt((E - E-)/(E+ - E-)).

    Parameters
    ----------
    psi_minus, psi_plus : StateVector
        Orthogonal eigenvectors of H restricted to their span.
    e_minus, e_plus : float
        Their energies, ``e_minus <= e_plus``.
    e_target : float
        Energy of the mix, in ``[e_minus, e_plus]``.
    sign : int
        +1 or -1, the relative sign of the two components.
    H : SymmetricOperator, optional
        When given, <Psi-|H|Psi+> = 0 is verified.

    Returns
    -------
    StateVector

    Raises
    ------
    TargetOutOfRange
        If ``e_target`` lies outside ``[e_minus, e_plus]``.
    NonEigenPair
        If the two states are not orthogonal or are coupled by H.

    """
    check_dims(psi_minus.dim, psi_plus.dim)
    if sign not in (1, -1):
        raise InvalidParameters(f"sign must be +1 or -1, got {sign!r}.")
    if e_minus > e_plus:
        raise TargetOutOfRange(f"e_minus = {e_minus!r} is above e_plus = {e_plus!r}.")
    if not e_minus <= e_target <= e_plus:
        raise TargetOutOfRange(f"Target {e_target!r} is outside [{e_minus!r}, {e_plus!r}].")
    overlap = psi_minus.overlap(psi_plus)
    if abs(overlap) > EIGENPAIR_TOL:
        raise NonEigenPair(f"States are not orthogonal, overlap {overlap:.3e}.")
    if H is not None:
        check_dims(H.dim, psi_minus.dim)
        coupling = H.matrix_element(psi_minus, psi_plus)
        if abs(coupling) > EIGENPAIR_TOL:
            raise NonEigenPair(f"<Psi-|H|Psi+> = {coupling:.3e} is not zero.")

    width = e_plus - e_minus
    if width == 0.0:
        return psi_minus
    w_minus = np.sqrt(max(e_plus - e_target, 0.0) / width)
    w_plus = np.sqrt(max(e_target - e_minus, 0.0) / width)
    return StateVector.normalized(w_minus * psi_minus.components + sign * w_plus * psi_plus.components)


@dataclass(frozen=True)
class PathologyParams:
    """
    Three-level model where a state orthogonal to phi0 reaches E_1 - epsilon
    with no psi_1 component.

    Parameters
    ----------
    e0, e1, e2 : float
        Model eigenenergies, ``e0 < e1 < e2``.
    epsilon : float
        Energy offset below e1, ``epsilon >= 0``.

    """

    e0: float
    e1: float
    e2: float
    epsilon: float = 0.0

    def __post_init__(self):
        values = (self.e0, self.e1, self.e2, self.epsilon)
        if not all(np.isfinite(v) for v in values):
            raise InvalidParameters(f"Pathology parameters must be finite, got {values!r}.")
        if not self.e0 < self.e1 < self.e2:
            raise InvalidParameters(f"Energies must ascend, got {self.e0!r}, {self.e1!r}, {self.e2!r}.")
        if self.epsilon < 0.0:
            raise InvalidParameters(f"epsilon must be >= 0, got {self.epsilon!r}.")
        if not self.e1 - self.epsilon > self.e0:
            raise InvalidParameters(f"e1 - epsilon = {self.e1 - self.epsilon!r} must lie above e0 = {self.e0!r}.")

    @property
    def a(self) -> float:
        return float(np.sqrt((self.e1 - self.epsilon - self.e0) / (self.e2 - self.e0)))

    @property
    def b(self) -> float:
        return float(np.sqrt((self.e2 - (self.e1 - self.epsilon)) / (self.e2 - self.e0)))


class PathologyModel(NamedTuple):
    H: SymmetricOperator
    phi0: StateVector
    phi1: StateVector
    a: float
    b: float


def make_pathology(params: PathologyParams) -> PathologyModel:
    """
    Build H = diag(e0, e1, e2) with phi0 = a psi0 + b psi2 and phi1 = b psi0 - a psi2.

    phi1 is orthogonal to phi0 and to psi1, yet E(phi1) = e1 - epsilon, and
    E(phi0) = e0 + e2 - (e1 - epsilon).

    Examples
    --------
    >>> model = make_pathology(PathologyParams(-2.903, -2.146, -2.06))
    >>> round(model.a, 4), round(model.b, 4)
    (0.9476, 0.3194)

    """
    H = SymmetricOperator.diagonal([params.e0, params.e1, params.e2])
    a, b = params.a, params.b
    phi0 = StateVector.normalized([a, 0.0, b])
    phi1 = StateVector.normalized([b, 0.0, -a])
    logger.debug(f"   > Pathology model a = {a:.6f}, b = {b:.6f}.")
    return PathologyModel(H=H, phi0=phi0, phi1=phi1, a=a, b=b)
