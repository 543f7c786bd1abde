"""Ground-state improvement orthogonal to an excited approximant, and the alternating Omega_1 loop."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from omega.errors import InfeasibleStart, NoCandidateDirection, NoHigherComponent, ParallelStates
from omega.functional import OmegaProblem, collect_perp
from omega.optimize import OptimizationTrace, OptimizerConfig, minimize_omega, minimize_omega_restarts
from omega.space import (
    PARALLEL_TOL,
    SpectralDecomposition,
    StateVector,
    SymmetricOperator,
    check_dims,
    energy,
    gram_schmidt_against,
    subspace_eigenpairs,
)

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-10
CANDIDATE_FLOOR = 1e-8
ADMISSIBILITY_SLACK = 1e-13
DEFAULT_MAX_ROUNDS = 50

DirectionSource = Callable[[SymmetricOperator, StateVector, StateVector, int], Optional[np.ndarray]]


class ProjectedGround(NamedTuple):
    """
    A ground-state approximant made orthogonal to an excited one.

    Attributes
    ----------
    state : StateVector
        phi_0^+.
    energy : float
        Energy from the closed form.
    energy_direct : float
        Rayleigh quotient of ``state``.
    admissible : bool
        Whether phi_0^+ is no worse than the phi_0 it came from.

    """

    state: StateVector
    energy: float
    energy_direct: float
    admissible: bool


def _no_worse(new: float, old: float) -> bool:
    return new <= old + ADMISSIBILITY_SLACK * max(1.0, abs(old))


def project_out_phi1(phi0: StateVector, phi1: StateVector, H: SymmetricOperator) -> ProjectedGround:
    """
    Make phi0 orthogonal to phi1 and decide whether that helps.

    phi_0^+ = (phi0 - phi1 s) / sqrt(1 - s^2) with s = <phi1|phi0>, and

        E(phi_0^+) = (E(phi0) + E(phi1) s^2 - 2 <phi0|H|phi1> s) / (1 - s^2).

    Parameters
    ----------
    phi0 : StateVector
        Ground-state approximant.
    phi1 : StateVector
        Excited-state approximant.
    H : SymmetricOperator
        The Hamiltonian.

    Returns
    -------
    ProjectedGround
        ``admissible`` is E(phi_0^+) <= E(phi0).

    Raises
    ------
    ParallelStates
        If |<phi1|phi0>| >= 1 - 1e-12.

    """
    check_dims(H.dim, phi0.dim, phi1.dim)
    s = phi1.overlap(phi0)
    if abs(s) >= 1.0 - PARALLEL_TOL:
        raise ParallelStates(f"phi0 and phi1 are parallel, overlap {s!r}.")
    e_phi0 = energy(H, phi0)
    closed = (e_phi0 + energy(H, phi1) * s * s - 2.0 * H.matrix_element(phi0, phi1) * s) / (1.0 - s * s)
    state = gram_schmidt_against(phi0, phi1)
    return ProjectedGround(
        state=state, energy=closed, energy_direct=energy(H, state), admissible=_no_worse(closed, e_phi0)
    )


def improve_against_exact(spec: SpectralDecomposition, phi0: StateVector) -> ProjectedGround:
    """
    Make phi0 orthogonal to the exact psi_1.

    E(phi_0^+) = E(phi0) - (E_1 - E(phi0)) s^2 / (1 - s^2), s = <psi_1|phi0>,
    which is never worse than phi0 while E(phi0) <= E_1.

    """
    check_dims(spec.dim, phi0.dim)
    psi1 = spec.state(1)
    s = psi1.overlap(phi0)
    if s * s >= 1.0 - PARALLEL_TOL:
        raise ParallelStates(f"phi0 is parallel to psi_1, overlap {s!r}.")
    coeffs = spec.overlaps(phi0)
    e_phi0 = float(spec.energies @ coeffs**2)
    closed = e_phi0 - (spec.energies[1] - e_phi0) * s * s / (1.0 - s * s)
    state = gram_schmidt_against(phi0, psi1)
    direct = float(spec.energies @ spec.overlaps(state) ** 2)
    return ProjectedGround(state=state, energy=float(closed), energy_direct=direct, admissible=_no_worse(closed, e_phi0))


class LeadingOrderCondition(NamedTuple):
    """Both sides of the leading-order admissibility condition; it holds when lhs >= rhs."""

    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs


def leading_order_condition(spec: SpectralDecomposition, phi0: StateVector) -> LeadingOrderCondition:
    """
    (E_1 - E_0)(1 - <psi_1|phi0>^2) against (E(phi0_perp) - E_0) <phi0_perp|phi0>^2.

    phi0_perp is the normalized part of phi0 above level 1. The right side is
    zero when phi0 has no such part.

    """
    e = spec.energies
    coeffs = spec.overlaps(phi0)
    lhs = float((e[1] - e[0]) * (1.0 - coeffs[1] ** 2))
    try:
        perp = collect_perp(spec, phi0, 1)
    except NoHigherComponent:
        return LeadingOrderCondition(lhs=lhs, rhs=0.0)
    e_perp = float(e @ spec.overlaps(perp) ** 2)
    rhs = float((e_perp - e[0]) * perp.overlap(phi0) ** 2)
    return LeadingOrderCondition(lhs=lhs, rhs=rhs)


@dataclass(frozen=True, eq=False)
class RefinementStep:
    """
    One round of rotation around phi1.

    Attributes
    ----------
    iteration : int
        Round number, from 1.
    phi0_current : StateVector
        Ground-state approximant after the round.
    energy_current : float
        Its energy.
    direction_added : StateVector
        The direction phi_0^(m+) paired with the previous approximant.
    accepted : bool
        Whether the lower Ritz vector improved the energy.
    ritz_values : tuple of float
        Both Ritz values of the 2x2 problem.
    diagonal_quotients : tuple of float
        Rayleigh quotients of the two basis states of the 2x2 problem.
    discarded : StateVector
        The upper Ritz vector Psi+.

    """

    iteration: int
    phi0_current: StateVector
    energy_current: float
    direction_added: StateVector
    accepted: bool
    ritz_values: Tuple[float, float]
    diagonal_quotients: Tuple[float, float]
    discarded: StateVector

    @property
    def gap_opened(self) -> bool:
        return self.ritz_values[0] <= min(self.diagonal_quotients) + ADMISSIBILITY_SLACK * max(
            1.0, abs(self.ritz_values[0])
        )


def _project_out(vector: np.ndarray, states: Tuple[StateVector, ...]) -> np.ndarray:
    w = np.array(vector, dtype=float)
    for _ in range(2):
        for state in states:
            w -= (state.components @ w) * state.components
    return w


def greedy_residual(H: SymmetricOperator, phi0: StateVector, phi1: StateVector, iteration: int) -> Optional[np.ndarray]:
    """
    The part of H phi0 orthogonal to span{phi0, phi1}, or a computational basis
    vector projected the same way when that residual vanishes.
    """
    residual = _project_out(H.apply(phi0), (phi0, phi1))
    scale = max(1.0, float(np.linalg.norm(H.apply(phi0))))
    if np.linalg.norm(residual) > CANDIDATE_FLOOR * scale:
        return residual
    for offset in range(H.dim):
        k = (iteration - 1 + offset) % H.dim
        candidate = _project_out(np.eye(H.dim)[k], (phi0, phi1))
        if np.linalg.norm(candidate) > CANDIDATE_FLOOR:
            return candidate
    return None


def rotate_improve(
    H: SymmetricOperator,
    phi0: StateVector,
    phi1: StateVector,
    direction_source: Optional[DirectionSource] = None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    tol: float = 1e-8,
) -> List[RefinementStep]:
    """
    Improve phi0 by 2x2 Rayleigh-Ritz steps inside the complement of phi1.

    Each round pairs the current phi0 with a new direction orthogonal to
    both phi0 and phi1, diagonalizes H on that plane and keeps the lower
    Ritz vector. Energies never increase and every iterate stays
    orthogonal to phi1.

    Parameters
    ----------
    H : SymmetricOperator
    phi0 : StateVector
        Start, orthogonal to phi1 within 1e-10.
    phi1 : StateVector
    direction_source : callable, optional
        ``(H, phi0_current, phi1, round) -> vector or None``; defaults to
        :func:`greedy_residual`. The vector is orthonormalized against
        phi0_current and phi1 before use.
    max_rounds : int
    tol : float
        Stop once the relative energy improvement of a round drops below it.

    Returns
    -------
    list of RefinementStep

    Raises
    ------
    InfeasibleStart
        If phi0 is not orthogonal to phi1.
    NoCandidateDirection
        If the first round finds no direction orthogonal to phi0 and phi1.
        Later rounds without a direction end the rotation instead.

    """
    check_dims(H.dim, phi0.dim, phi1.dim)
    leak = phi1.overlap(phi0)
    if abs(leak) > ORTHOGONALITY_TOL:
        raise InfeasibleStart(f"phi0 overlaps phi1 by {leak:.3e}.")
    source = direction_source or greedy_residual

    current = phi0
    e_current = energy(H, current)
    steps: List[RefinementStep] = []
    for iteration in range(1, max_rounds + 1):
        raw = source(H, current, phi1, iteration)
        direction = None if raw is None else _project_out(raw, (current, phi1))
        if direction is None or np.linalg.norm(direction) <= CANDIDATE_FLOOR:
            if not steps:
                raise NoCandidateDirection(f"No direction orthogonal to phi0 and phi1 in round {iteration}.")
            logger.debug(f"   > Rotation round {iteration}: no new direction; keeping {len(steps)} rounds.")
            break
        added = StateVector.normalized(direction)

        values, vectors = subspace_eigenpairs(H, [current, added])
        lowest = StateVector.normalized(_project_out(vectors[0].components, (phi1,)))
        e_old = e_current
        accepted = values[0] < e_old
        if accepted:
            current = lowest
            e_current = float(values[0])
        steps.append(
            RefinementStep(
                iteration=iteration,
                phi0_current=current,
                energy_current=e_current,
                direction_added=added,
                accepted=bool(accepted),
                ritz_values=(float(values[0]), float(values[1])),
                diagonal_quotients=(e_old, energy(H, added)),
                discarded=vectors[1],
            )
        )
        gain = (e_old - e_current) / max(1.0, abs(e_old))
        logger.debug(f"   > Rotation round {iteration}: E = {e_current:.12f}, gain {gain:.3e}.")
        if gain < tol:
            break
    return steps


@dataclass
class AlternationRecord:
    """
    One outer round of the alternating loop.

    The oracle fields are None unless a spectral decomposition was supplied.
    """

    round: int
    omega_value: float
    phi1_energy: float
    phi0_energy: float
    admissible: bool
    rotation_rounds: int
    termination: str
    psi0_phi1_sq: Optional[float] = None
    psi1_phi0_sq: Optional[float] = None
    psi0_phi0_sq: Optional[float] = None
    psi1_phi1_sq: Optional[float] = None


@dataclass
class AlternationResult:
    phi0: StateVector
    phi1: StateVector
    history: List[AlternationRecord] = field(default_factory=list)


def _minimize_omega1(problem: OmegaProblem, cfg: OptimizerConfig, warm: Optional[StateVector]) -> OptimizationTrace:
    if warm is not None:
        try:
            return minimize_omega(problem, warm, cfg)
        except InfeasibleStart:
            logger.debug("   > Warm start infeasible, falling back to restarts.")
    return minimize_omega_restarts(problem, cfg).best


def alternate(
    H: SymmetricOperator,
    phi0_init: StateVector,
    cfg: Optional[OptimizerConfig] = None,
    outer_rounds: int = 5,
    oracle: Optional[SpectralDecomposition] = None,
    direction_source: Optional[DirectionSource] = None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> AlternationResult:
    """
    Alternate Omega_1 minimization for phi1 with refinement of phi0.

    Each outer round (a) minimizes Omega_1 given the current phi0 (restarts
    in the first round, warm start from the previous phi1 afterwards), then
    (b) projects phi0 out of phi1 and, when that is admissible, rotates it
    around phi1. Inadmissible rounds are recorded and the refinement is
    skipped.

    Parameters
    ----------
    H : SymmetricOperator
    phi0_init : StateVector
    cfg : OptimizerConfig, optional
    outer_rounds : int
    oracle : SpectralDecomposition, optional
        Only used to record overlaps with the exact states.
    direction_source : callable, optional
        Passed to :func:`rotate_improve`.
    max_rounds : int
        Rotation rounds per outer round.

    Returns
    -------
    AlternationResult

    Notes
    -----
    Omega_1 depends on phi0 only, so once phi0 stops improving by more than
    ``tol_omega`` neither step can improve further and the loop ends.

    """
    cfg = cfg or OptimizerConfig()
    check_dims(H.dim, phi0_init.dim)
    phi0 = phi0_init
    phi1: Optional[StateVector] = None
    history: List[AlternationRecord] = []

    for round_ in range(1, outer_rounds + 1):
        trace = _minimize_omega1(OmegaProblem(H, (phi0,)), cfg, phi1)
        phi1 = trace.final_state
        e_before = energy(H, phi0)

        projected = project_out_phi1(phi0, phi1, H)
        rotation_rounds = 0
        if projected.admissible:
            phi0 = projected.state
            try:
                steps = rotate_improve(H, phi0, phi1, direction_source, max_rounds, cfg.tol_omega)
            except NoCandidateDirection as err:
                logger.debug(f"   > Round {round_}: {err} Keeping the projected phi0.")
                steps = []
            if steps:
                phi0 = steps[-1].phi0_current
                rotation_rounds = len(steps)
        else:
            logger.warning(
                f"   > Round {round_}: projection raises E(phi0) to {projected.energy:.12f}; refinement skipped."
            )
        e_after = energy(H, phi0)

        record = AlternationRecord(
            round=round_,
            omega_value=trace.final_value,
            phi1_energy=energy(H, phi1),
            phi0_energy=e_after,
            admissible=projected.admissible,
            rotation_rounds=rotation_rounds,
            termination=trace.termination.value,
        )
        if oracle is not None:
            c0 = oracle.overlaps(phi0)
            c1 = oracle.overlaps(phi1)
            record.psi0_phi1_sq = float(c1[0] ** 2)
            record.psi1_phi0_sq = float(c0[1] ** 2)
            record.psi0_phi0_sq = float(c0[0] ** 2)
            record.psi1_phi1_sq = float(c1[1] ** 2)
            if record.psi0_phi1_sq > record.psi1_phi0_sq:
                logger.debug(
                    f"   > Round {round_}: <psi0|phi1>^2 = {record.psi0_phi1_sq:.3e} exceeds "
                    f"<psi1|phi0>^2 = {record.psi1_phi0_sq:.3e}; refinement is past its breakdown point."
                )
        history.append(record)
        logger.info(f"   > Round {round_}: Omega_1 = {trace.final_value:.12f}, E(phi0) = {e_after:.12f}.")

        if (e_before - e_after) / max(1.0, abs(e_before)) < cfg.tol_omega:
            break
    return AlternationResult(phi0=phi0, phi1=phi1, history=history)
