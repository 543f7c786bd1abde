"""Minimization on the unit sphere: Omega_n, its steepened form, and constrained energies."""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg
from joblib import Parallel, delayed

from omega.errors import (
    ConfigError,
    EmptyComplement,
    EnergyOrderingViolation,
    InfeasibleStart,
    OverlapSaturation,
)
from omega.functional import (
    OmegaProblem,
    SteepeningParams,
    omega,
    omega_step_difference,
    omega_gradient,
    project_tangent,
    steepened_from_omega,
)
from omega.space import StateVector, SymmetricOperator, check_dims, energy, energy_step_difference, orthonormalize

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-10
MAX_START_ATTEMPTS = 200
CURVATURE_STEP = 1e-4

PRECONDITION_ERRORS = (EnergyOrderingViolation, OverlapSaturation)


@dataclass
class OptimizerConfig:
    """
    Settings shared by every minimization in the package.

    Parameters
    ----------
    tol_omega : float
        Target accuracy of a converged state (the tolerance criterion of the
        Omega_n minimization). Gradient and step thresholds derive from it.
    max_iters : int
        Iteration cap per run.
    step_init : float
        Initial (and maximal) line-search step.
    backtrack_factor : float
        Step shrink factor in (0, 1).
    armijo_c : float
        Sufficient-decrease constant.
    restart_count : int
        Number of random restarts in ``minimize_omega_restarts``.
    grad_ratio : float
        Projected-gradient threshold is ``tol_omega * grad_ratio``.
    step_ratio : float
        Step-length threshold is ``tol_omega * step_ratio``.
    trace_stride : int
        Keep every ``trace_stride``-th iterate in the trace.
    seed : int
        Base seed for random restarts; restart k uses ``seed + k``.
    n_jobs : int
        joblib workers for restarts.

    """

    tol_omega: float = 1e-8
    max_iters: int = 10000
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4
    restart_count: int = 8
    grad_ratio: float = 1e-4
    step_ratio: float = 1e-7
    trace_stride: int = 10
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        positive = {
            "tol_omega": self.tol_omega,
            "max_iters": self.max_iters,
            "step_init": self.step_init,
            "backtrack_factor": self.backtrack_factor,
            "armijo_c": self.armijo_c,
            "restart_count": self.restart_count,
            "grad_ratio": self.grad_ratio,
            "step_ratio": self.step_ratio,
            "trace_stride": self.trace_stride,
        }
        for name, value in positive.items():
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be positive, got {value!r}.")
        if self.backtrack_factor >= 1.0:
            raise ConfigError(f"backtrack_factor must be below 1, got {self.backtrack_factor!r}.")
        if self.armijo_c >= 1.0:
            raise ConfigError(f"armijo_c must be below 1, got {self.armijo_c!r}.")
        if self.n_jobs == 0:
            raise ConfigError("n_jobs must be nonzero.")

    @property
    def grad_tol(self) -> float:
        return self.tol_omega * self.grad_ratio

    @property
    def step_tol(self) -> float:
        return self.tol_omega * self.step_ratio

    def replace(self, **changes) -> "OptimizerConfig":
        return replace(self, **changes)


class Termination(str, Enum):
    GRADIENT = "GradientConverged"
    STEP = "StepConverged"
    MAX_ITERS = "MaxIters"
    PRECONDITION = "PreconditionLost"


class TracePoint(NamedTuple):
    iteration: int
    objective: float
    grad_norm: float


@dataclass
class OptimizationTrace:
    """
    Outcome of one minimization run.

    Attributes
    ----------
    iterates_kept : list of TracePoint
        Sampled (iteration, objective, gradient norm); the objective is
        accumulated from accurate differences and is non-increasing.
    termination : Termination
        Why the run stopped.
    final_state : StateVector
        Last accepted iterate.
    final_value : float
        Objective re-evaluated directly at ``final_state``.
    iterations : int
        Number of accepted steps.
    extras : dict
        Run-specific values (for example the final E_f).

    """

    iterates_kept: List[TracePoint]
    termination: Termination
    final_state: StateVector
    final_value: float
    iterations: int
    extras: Dict[str, float] = field(default_factory=dict)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([p.objective for p in self.iterates_kept])


def _descend(
    objective: Callable[[StateVector], float],
    difference: Callable[[StateVector, np.ndarray], float],
    gradient: Callable[[StateVector], np.ndarray],
    retract: Callable[[StateVector, np.ndarray], StateVector],
    start: StateVector,
    cfg: OptimizerConfig,
    label: str,
) -> OptimizationTrace:
    """Projected-gradient descent with Armijo backtracking and a retraction."""
    x = start
    value = objective(x)
    g = gradient(x)
    g_norm = float(np.linalg.norm(g))
    kept = [TracePoint(0, value, g_norm)]
    t = cfg.step_init
    iterations = 0
    termination = Termination.MAX_ITERS

    while iterations < cfg.max_iters:
        if g_norm <= cfg.grad_tol:
            termination = Termination.GRADIENT
            break
        accepted = False
        precondition_hit = False
        while t * g_norm >= cfg.step_tol:
            try:
                step = -t * g
                trial = retract(x, step)
                delta = difference(x, step)
            except PRECONDITION_ERRORS:
                precondition_hit = True
                t *= cfg.backtrack_factor
                continue
            if delta <= -cfg.armijo_c * t * g_norm**2:
                accepted = True
                break
            t *= cfg.backtrack_factor
        if not accepted:
            termination = Termination.PRECONDITION if precondition_hit else Termination.STEP
            logger.debug(f"   > {label}: line search exhausted at iteration {iterations} ({termination.value}).")
            break

        step_length = float(np.linalg.norm(trial.components - x.components))
        x = trial
        value = value + delta
        g = gradient(x)
        g_norm = float(np.linalg.norm(g))
        iterations += 1
        if iterations % cfg.trace_stride == 0:
            kept.append(TracePoint(iterations, value, g_norm))
            logger.debug(f"   > {label}: iter {iterations}, objective {value:.12f}, |g| {g_norm:.3e}.")
        if step_length <= cfg.step_tol:
            termination = Termination.STEP
            break
        t = min(cfg.step_init, t / cfg.backtrack_factor)

    if kept[-1].iteration != iterations:
        kept.append(TracePoint(iterations, value, g_norm))
    return OptimizationTrace(
        iterates_kept=kept,
        termination=termination,
        final_state=x,
        final_value=objective(x),
        iterations=iterations,
    )


def _sphere_retract(x: StateVector, displacement: np.ndarray) -> StateVector:
    return StateVector.normalized(x.components + displacement)


def minimize_omega(problem: OmegaProblem, start: StateVector, cfg: Optional[OptimizerConfig] = None) -> OptimizationTrace:
    """
    Minimize Omega_n over phi_n on the unit sphere from one start.

    Parameters
    ----------
    problem : OmegaProblem
        Hamiltonian and lower approximants.
    start : StateVector
        Initial phi_n; must satisfy the Omega_n preconditions.
    cfg : OptimizerConfig, optional
        Stopping and line-search settings.

    Returns
    -------
    OptimizationTrace

    Raises
    ------
    InfeasibleStart
        If Omega_n cannot be evaluated at ``start``.

    Notes
    -----
    Steps that cross an energy-ordering or overlap boundary are shrunk;
    if no feasible step remains the run ends with ``PreconditionLost``.
    The iteration never uses the exact eigenpairs.

    """
    cfg = cfg or OptimizerConfig()
    check_dims(problem.dim, start.dim)
    try:
        omega(problem, start)
    except PRECONDITION_ERRORS as err:
        raise InfeasibleStart(f"Start violates the Omega_{problem.n} preconditions: {err}") from err

    return _descend(
        objective=lambda phi: omega(problem, phi),
        difference=lambda phi, step: omega_step_difference(problem, phi, step),
        gradient=lambda phi: omega_gradient(problem, phi),
        retract=_sphere_retract,
        start=start,
        cfg=cfg,
        label=f"Omega_{problem.n}",
    )


def random_state(rng: np.random.Generator, dim: int) -> StateVector:
    """A state drawn uniformly from the unit sphere."""
    return StateVector.normalized(rng.standard_normal(dim))


def feasible_random_start(problem: OmegaProblem, seed: int) -> Optional[StateVector]:
    """First uniform random state that satisfies the Omega_n preconditions, or None."""
    rng = np.random.default_rng(seed)
    for _ in range(MAX_START_ATTEMPTS):
        candidate = random_state(rng, problem.dim)
        try:
            omega(problem, candidate)
        except PRECONDITION_ERRORS:
            continue
        return candidate
    return None


@dataclass
class RestartReport:
    """All restart outcomes of an Omega_n minimization and the selected best."""

    best: OptimizationTrace
    outcomes: List[OptimizationTrace]
    seeds: List[Optional[int]]

    @property
    def best_index(self) -> int:
        return self.outcomes.index(self.best)


def minimize_omega_restarts(
    problem: OmegaProblem, cfg: Optional[OptimizerConfig] = None, start: Optional[StateVector] = None
) -> RestartReport:
    """
    Minimize Omega_n from ``restart_count`` random starts (plus ``start``).

    Random starts are uniform on the sphere, filtered by the preconditions,
    and seeded with ``cfg.seed + k``. The lowest final Omega_n whose energy
    ordering is still consistent is selected; every outcome is returned.

    Raises
    ------
    InfeasibleStart
        If no feasible start could be found.

    """
    cfg = cfg or OptimizerConfig()
    starts: List[StateVector] = []
    seeds: List[Optional[int]] = []
    if start is not None:
        starts.append(start)
        seeds.append(None)
    for k in range(cfg.restart_count):
        candidate = feasible_random_start(problem, cfg.seed + k)
        if candidate is None:
            logger.debug(f"   > No feasible start for seed {cfg.seed + k}.")
            continue
        starts.append(candidate)
        seeds.append(cfg.seed + k)
    if not starts:
        raise InfeasibleStart(f"No feasible start for Omega_{problem.n} after {cfg.restart_count} seeds.")

    outcomes = Parallel(n_jobs=cfg.n_jobs)(delayed(minimize_omega)(problem, s, cfg) for s in starts)
    consistent = [trace for trace in outcomes if _ordering_consistent(problem, trace.final_state)]
    if not consistent:
        logger.warning(f"   > All {len(outcomes)} restarts of Omega_{problem.n} lost the energy ordering.")
        consistent = outcomes
    best = min(consistent, key=lambda trace: trace.final_value)
    logger.info(
        f"   > Omega_{problem.n}: best of {len(outcomes)} runs = {best.final_value:.12f} ({best.termination.value})."
    )
    return RestartReport(best=best, outcomes=list(outcomes), seeds=seeds)


def _ordering_consistent(problem: OmegaProblem, phi: StateVector) -> bool:
    try:
        omega(problem, phi)
    except PRECONDITION_ERRORS:
        return False
    return True


def complement_basis(constraints: Sequence[StateVector], dim: int) -> np.ndarray:
    """Orthonormal basis (columns) of the orthogonal complement of the constraints."""
    if not constraints:
        return np.eye(dim)
    check_dims(dim, *(c.dim for c in constraints))
    matrix = np.column_stack([c.components for c in constraints])
    return scipy.linalg.null_space(matrix.T)


def minimize_energy_orthogonal(
    H: SymmetricOperator,
    constraints: Sequence[StateVector],
    start: StateVector,
    cfg: Optional[OptimizerConfig] = None,
) -> OptimizationTrace:
    """
    Minimize E(phi) over unit states orthogonal to every constraint.

    Parameters
    ----------
    H : SymmetricOperator
        The Hamiltonian.
    constraints : sequence of StateVector
        States the result must stay orthogonal to.
    start : StateVector
        Initial state, orthogonal to the constraints within 1e-10.
    cfg : OptimizerConfig, optional

    Returns
    -------
    OptimizationTrace
        Converges to the lowest Ritz vector of H on the complement.

    Raises
    ------
    InfeasibleStart
        If ``start`` is not orthogonal to the constraints.
    EmptyComplement
        If the constraints span the whole space.

    """
    cfg = cfg or OptimizerConfig()
    check_dims(H.dim, start.dim, *(c.dim for c in constraints))
    basis = orthonormalize(constraints, drop_tol=1e-12) if constraints else np.zeros((H.dim, 0))
    if basis.shape[1] >= H.dim:
        raise EmptyComplement(f"{len(constraints)} constraints span the whole {H.dim}-dimensional space.")
    leak = float(np.max(np.abs(basis.T @ start.components))) if basis.shape[1] else 0.0
    if leak > ORTHOGONALITY_TOL:
        raise InfeasibleStart(f"Start overlaps the constraints by {leak:.3e}.")

    def project(vector):
        return vector - basis @ (basis.T @ vector)

    def gradient(phi):
        return project_tangent(phi, project(2.0 * H.apply(phi)))

    def difference(phi, step):
        return energy_step_difference(H, phi, project(step))

    def retract(phi, displacement):
        return StateVector.normalized(project(phi.components + displacement))

    return _descend(
        objective=lambda phi: energy(H, phi),
        difference=difference,
        gradient=gradient,
        retract=retract,
        start=StateVector.normalized(project(start.components)),
        cfg=cfg,
        label="E_orth",
    )


def estimate_curvature(problem: OmegaProblem, phi: StateVector, step: float = CURVATURE_STEP) -> float:
    """
    Largest second directional derivative of Omega_n at phi.

    Directions are the computational basis vectors projected onto the
    tangent space; each is followed along a great circle. Directions whose
    stencil leaves the feasible region are skipped.

    """
    x = phi.components
    f0 = omega(problem, phi)
    largest = 0.0
    for k in range(problem.dim):
        direction = project_tangent(phi, np.eye(problem.dim)[k])
        norm = np.linalg.norm(direction)
        if norm < 1e-8:
            continue
        u = direction / norm
        try:
            f_plus = omega(problem, StateVector.normalized(np.cos(step) * x + np.sin(step) * u))
            f_minus = omega(problem, StateVector.normalized(np.cos(step) * x - np.sin(step) * u))
        except PRECONDITION_ERRORS:
            continue
        largest = max(largest, (f_plus - 2.0 * f0 + f_minus) / step**2)
    return largest


def minimize_steepened(
    problem: OmegaProblem,
    start: StateVector,
    params: Optional[SteepeningParams] = None,
    cfg: Optional[OptimizerConfig] = None,
) -> OptimizationTrace:
    """
    Jointly minimize N * F[Omega_n, E_f] over (phi_n, E_f).

    For any phi_n the E_f block is minimized exactly at E_f = Omega_n(phi_n),
    where the penalty vanishes. Every iteration therefore moves phi_n along
    -N grad Omega_n with E_f following the valley, which decreases N * F at
    the rate of N * Omega_n whatever the value of 1/|E_f T|.

    Parameters
    ----------
    problem : OmegaProblem
    start : StateVector
    params : SteepeningParams, optional
        N and T; ``e_f`` is replaced by the block minimum. Defaults to
        N = 1 and T from ``estimate_curvature`` at ``start``.
    cfg : OptimizerConfig, optional

    Returns
    -------
    OptimizationTrace
        ``extras`` holds ``e_f``, ``omega``, ``raw`` (F without N),
        ``scaled`` (N * F), ``penalty_weight``, ``curvature_T`` and ``scale_N``.

    Raises
    ------
    InfeasibleStart
        If Omega_n cannot be evaluated at ``start``.
    ZeroEf
        If the valley passes through E_f = 0.

    """
    cfg = cfg or OptimizerConfig()
    check_dims(problem.dim, start.dim)
    try:
        w = omega(problem, start)
    except PRECONDITION_ERRORS as err:
        raise InfeasibleStart(f"Start violates the Omega_{problem.n} preconditions: {err}") from err
    if params is None:
        params = SteepeningParams.from_curvature(estimate_curvature(problem, start), e_f=w)
    params = params.with_e_f(w)
    scale = params.scale_N
    logger.debug(f"   > Steepened run: N = {scale}, T = {params.curvature_T:.6f}, 1/|E_f T| = {params.penalty_weight:.6f}.")

    def objective(phi):
        value = omega(problem, phi)
        return scale * steepened_from_omega(value, params.with_e_f(value), scaled=False)

    trace = _descend(
        objective=objective,
        difference=lambda phi, step: scale * omega_step_difference(problem, phi, step),
        gradient=lambda phi: scale * omega_gradient(problem, phi),
        retract=_sphere_retract,
        start=start,
        cfg=cfg,
        label="F",
    )
    final_omega = omega(problem, trace.final_state)
    params = params.with_e_f(final_omega)
    raw = steepened_from_omega(final_omega, params, scaled=False)
    trace.extras = {
        "e_f": params.e_f,
        "omega": final_omega,
        "raw": raw,
        "scaled": scale * raw,
        "penalty_weight": params.penalty_weight,
        "curvature_T": params.curvature_T,
        "scale_N": scale,
    }
    return trace
