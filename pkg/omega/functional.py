"""The Omega_n excited-state functional, its derivatives and its steepened form."""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from omega.errors import (
    EnergyOrderingViolation,
    InvalidParameters,
    NoHigherComponent,
    OverlapSaturation,
    ParallelStates,
    ZeroEf,
)
from omega.space import (
    PARALLEL_TOL,
    EigenbasisCoordinates,
    SpectralDecomposition,
    StateVector,
    SymmetricOperator,
    check_dims,
    energy,
    energy_step_difference,
    to_eigenbasis,
)

logger = logging.getLogger(__name__)

DENOMINATOR_GUARD = 1e-10
PERP_WEIGHT_FLOOR = 1e-24
HESSIAN_STEP = 1e-4
EF_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class OmegaProblem:
    """
    The data that defines Omega_n: the Hamiltonian and the lower approximants.

    Parameters
    ----------
    H : SymmetricOperator
        The Hamiltonian.
    lower_approximants : sequence of StateVector
        phi_0 ... phi_{n-1}, in the caller's order, never reordered.
    n : int, optional
        Target level; defaults to ``len(lower_approximants)`` and must equal it.

    Raises
    ------
    ParallelStates
        If two lower approximants are (numerically) parallel.

    """

    H: SymmetricOperator
    lower_approximants: Tuple[StateVector, ...] = ()
    n: Optional[int] = None
    phis: np.ndarray = field(init=False, repr=False)
    h_phis: np.ndarray = field(init=False, repr=False)
    lower_energies: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lower = tuple(self.lower_approximants)
        n = len(lower) if self.n is None else self.n
        if n != len(lower):
            raise InvalidParameters(f"Omega_{n} needs {n} lower approximants, got {len(lower)}.")
        check_dims(self.H.dim, *(phi.dim for phi in lower))
        for i in range(len(lower)):
            for j in range(i + 1, len(lower)):
                overlap = lower[i].overlap(lower[j])
                if abs(overlap) >= 1.0 - PARALLEL_TOL:
                    raise ParallelStates(f"Lower approximants {i} and {j} are parallel, overlap {overlap!r}.")

        phis = np.column_stack([phi.components for phi in lower]) if lower else np.zeros((self.H.dim, 0))
        h_phis = self.H.entries @ phis
        object.__setattr__(self, "lower_approximants", lower)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "h_phis", h_phis)
        object.__setattr__(self, "lower_energies", np.einsum("ij,ij->j", phis, h_phis))

    @property
    def dim(self) -> int:
        return self.H.dim


class OmegaTerms(NamedTuple):
    """Intermediate quantities of one Omega_n evaluation."""

    energy: float
    h_phi: np.ndarray
    overlaps: np.ndarray
    couplings: np.ndarray
    gaps: np.ndarray
    residuals: np.ndarray
    norm_factor: float
    lower_part: float

    @property
    def value(self) -> float:
        return self.energy + 2.0 * self.lower_part / self.norm_factor


def _check_guards(gaps: np.ndarray, norm_factor: float) -> None:
    if gaps.size and gaps.min() <= DENOMINATOR_GUARD:
        i = int(np.argmin(gaps))
        raise EnergyOrderingViolation(
            f"E(phi_n) - E(phi_{i}) = {gaps[i]:.3e} is not above the guard {DENOMINATOR_GUARD:.0e}."
        )
    if norm_factor <= DENOMINATOR_GUARD:
        raise OverlapSaturation(
            f"1 - sum <phi_i|phi_n>^2 = {norm_factor:.3e} is not above the guard {DENOMINATOR_GUARD:.0e}."
        )


def omega_terms(problem: OmegaProblem, phi_n: StateVector) -> OmegaTerms:
    """
    Evaluate every piece of Omega_n at phi_n, enforcing the preconditions.

    Raises
    ------
    EnergyOrderingViolation
        If E(phi_n) - E(phi_i) <= DENOMINATOR_GUARD for some i < n.
    OverlapSaturation
        If 1 - sum_i <phi_i|phi_n>^2 <= DENOMINATOR_GUARD.

    """
    check_dims(problem.dim, phi_n.dim)
    x = phi_n.components
    h_phi = problem.H.entries @ x
    e_phi = float(x @ h_phi)
    overlaps = problem.phis.T @ x
    couplings = problem.h_phis.T @ x
    gaps = e_phi - problem.lower_energies
    norm_factor = float(1.0 - overlaps @ overlaps)
    _check_guards(gaps, norm_factor)
    residuals = e_phi * overlaps - couplings
    lower_part = float(np.sum(residuals**2 / gaps))
    return OmegaTerms(e_phi, h_phi, overlaps, couplings, gaps, residuals, norm_factor, lower_part)


def omega(problem: OmegaProblem, phi_n: StateVector) -> float:
    """
    The excited-state functional Omega_n.

    Omega_n = E(phi_n) + 2 [sum_{i<n} (E(phi_n)<phi_i|phi_n> - <phi_i|H|phi_n>)^2
    / (E(phi_n) - E(phi_i))] / (1 - sum_{i<n} <phi_i|phi_n>^2).

    For n = 0 the sum is empty and Omega_0 = E(phi_0) (Eckart).

    """
    return omega_terms(problem, phi_n).value


def lower_part_estimate(problem: OmegaProblem, phi_n: StateVector) -> float:
    """The known-quantity estimate sum_i (E<phi_i|phi_n> - <phi_i|H|phi_n>)^2/(E - E_i)."""
    return omega_terms(problem, phi_n).lower_part


def omega_step_difference(problem: OmegaProblem, phi_n: StateVector, displacement: np.ndarray) -> float:
    """
    Omega_n((phi_n + v)/|phi_n + v|) - Omega_n(phi_n) for a displacement v.

    Overlaps, couplings and the energy of the displaced state are built as
    increments on those of phi_n, so nothing is differenced between two
    nearly equal unit vectors. Line searches use this form.

    Raises
    ------
    EnergyOrderingViolation, OverlapSaturation
        If the displaced state violates the Omega_n preconditions.

    """
    old = omega_terms(problem, phi_n)
    x = phi_n.components
    v = np.asarray(displacement, dtype=float)
    check_dims(problem.dim, v.shape[0])
    d_energy = energy_step_difference(problem.H, phi_n, v)
    nu = np.sqrt(1.0 + 2.0 * float(x @ v) + float(v @ v))

    e_new = old.energy + d_energy
    overlaps = (old.overlaps + problem.phis.T @ v) / nu
    couplings = (old.couplings + problem.h_phis.T @ v) / nu
    gaps = e_new - problem.lower_energies
    norm_factor = float(1.0 - overlaps @ overlaps)
    _check_guards(gaps, norm_factor)
    residuals = e_new * overlaps - couplings
    lower_part = float(np.sum(residuals**2 / gaps))
    d_correction = 2.0 * (lower_part / norm_factor - old.lower_part / old.norm_factor)
    return d_energy + d_correction


def project_tangent(phi: StateVector, vector: np.ndarray) -> np.ndarray:
    """Project an ambient vector onto the tangent space of the unit sphere at phi."""
    x = phi.components
    return vector - (x @ vector) * x


def omega_gradient(problem: OmegaProblem, phi_n: StateVector) -> np.ndarray:
    """
    Gradient of Omega_n on the unit sphere at phi_n.

    The Euclidean gradient is assembled analytically from dE = 2 H phi and
    the chain rule through Omega_n, then projected onto the tangent space.

    Returns
    -------
    np.ndarray
        Tangent vector (orthogonal to phi_n).

    """
    t = omega_terms(problem, phi_n)
    g_energy = 2.0 * t.h_phi
    # d r_i = s_i dE + E phi_i - H phi_i
    g_residuals = np.outer(g_energy, t.overlaps) + t.energy * problem.phis - problem.h_phis
    g_lower = g_residuals @ (2.0 * t.residuals / t.gaps) - g_energy * np.sum(t.residuals**2 / t.gaps**2)
    g_norm = -2.0 * problem.phis @ t.overlaps
    g_total = g_energy + 2.0 * (g_lower / t.norm_factor - t.lower_part * g_norm / t.norm_factor**2)
    return project_tangent(phi_n, g_total)


@dataclass(frozen=True)
class SaddleDecomposition:
    """
    E(phi_n) split around E(psi_n) into its lower and higher parts.

    Attributes
    ----------
    e_psi_n : float
        Exact energy of level n.
    p_low : float
        P_L = sum_{i<n} (E_n - E_i) <psi_i|phi_n>^2 >= 0.
    p_high : float
        P_H = sum_{i>n} (E_i - E_n) <psi_i|phi_n>^2 >= 0.

    """

    e_psi_n: float
    p_low: float
    p_high: float

    @property
    def e_phi_n(self) -> float:
        return self.e_psi_n - self.p_low + self.p_high

    @property
    def paraboloid(self) -> float:
        """E(psi_n) + P_L + P_H, which equals E(phi_n) + 2 P_L."""
        return self.e_psi_n + self.p_low + self.p_high


def saddle_decompose(spec: SpectralDecomposition, phi_n: StateVector, n: int) -> SaddleDecomposition:
    """Split E(phi_n) into E(psi_n) - P_L + P_H."""
    coeffs2 = spec.overlaps(phi_n) ** 2
    e = spec.energies
    p_low = float(np.sum((e[n] - e[:n]) * coeffs2[:n]))
    p_high = float(np.sum((e[n + 1 :] - e[n]) * coeffs2[n + 1 :]))
    return SaddleDecomposition(e_psi_n=float(e[n]), p_low=p_low, p_high=p_high)


def collect_perp(spec: SpectralDecomposition, phi_i: StateVector, n: int) -> StateVector:
    """
    The normalized higher-than-n part of phi_i.

    Raises
    ------
    NoHigherComponent
        If sum_{j>n} <psi_j|phi_i>^2 <= 1e-24.

    """
    high = spec.overlaps(phi_i)[n + 1 :]
    weight = float(high @ high)
    if weight <= PERP_WEIGHT_FLOOR:
        raise NoHigherComponent(f"State has higher-than-{n} weight {weight:.3e}.")
    return StateVector.normalized(spec.vectors[:, n + 1 :] @ high)


class LeadingOrderElements(NamedTuple):
    """Exact matrix elements next to their leading-order forms."""

    overlap: float
    overlap_leading: float
    coupling: float
    coupling_leading: float


def leading_order_elements(
    spec: SpectralDecomposition, phi_i: StateVector, i: int, phi_n: StateVector, n: int
) -> LeadingOrderElements:
    """
    <phi_i|phi_n> and <phi_i|H|phi_n> with their leading-order estimates.

    The estimates are <psi_i|phi_n> + <psi_n|phi_i> and
    E_i <psi_i|phi_n> + E_n <psi_n|phi_i>, valid when phi_i ~ psi_i and
    phi_n ~ psi_n.

    """
    c_n = spec.overlaps(phi_n)
    c_i = spec.overlaps(phi_i)
    e = spec.energies
    return LeadingOrderElements(
        overlap=float(c_i @ c_n),
        overlap_leading=float(c_n[i] + c_i[n]),
        coupling=float(c_i @ (e * c_n)),
        coupling_leading=float(e[i] * c_n[i] + e[n] * c_i[n]),
    )


@dataclass(frozen=True, eq=False)
class HessianReport:
    """
    Finite-difference Hessian of Omega_n in the eigenbasis chart.

    Attributes
    ----------
    n : int
        Target level.
    coordinates : np.ndarray
        Chart point (lower overlaps then higher overlaps).
    matrix : np.ndarray
        Symmetrized second-derivative matrix.
    principal_minors : np.ndarray
        Leading principal minor determinants, sizes 1 .. len(coordinates).
    predicted_diagonal : np.ndarray
        Leading-order diagonal 2(E_n - E_i) (i < n), 2(E_j - E_n) (j > n).
    predicted_minors : np.ndarray
        Cumulative products of ``predicted_diagonal`` (2^(k+1) convention).
    predicted_minors_printed : np.ndarray
        The same products with the printed 2^k prefactor, i.e. halved.
    perp_energies : list of float or None
        Energy of ``collect_perp(phi_i, n)`` per lower approximant; None when
        phi_i has no higher component.
    step : float
        Finite-difference step.

    """

    n: int
    coordinates: np.ndarray
    matrix: np.ndarray
    principal_minors: np.ndarray
    predicted_diagonal: np.ndarray
    predicted_minors: np.ndarray
    predicted_minors_printed: np.ndarray
    perp_energies: List[Optional[float]]
    step: float

    @property
    def positive_definite(self) -> bool:
        """Sylvester's criterion on the leading minors."""
        return bool(np.all(self.principal_minors > 0))


def omega_hessian(
    problem: OmegaProblem, spec: SpectralDecomposition, phi_n: StateVector, step: float = HESSIAN_STEP
) -> HessianReport:
    """
    Central finite-difference Hessian of Omega_n at phi_n.

    Parameters
    ----------
    problem : OmegaProblem
        The functional.
    spec : SpectralDecomposition
        Exact eigenpairs that define the chart.
    phi_n : StateVector
        Evaluation point.
    step : float
        Finite-difference step in chart coordinates.

    Returns
    -------
    HessianReport

    Notes
    -----
    The chart is ``EigenbasisCoordinates`` around level n, so the diagonal
    ordering is <psi_0|phi_n>, ..., <psi_{n-1}|phi_n>, then the higher
    overlaps. Errors raised by ``omega`` at stencil points propagate.

    """
    n = problem.n
    coords = to_eigenbasis(phi_n, spec, n)
    x0 = coords.chart
    size = x0.shape[0]

    def f(x):
        return omega(problem, EigenbasisCoordinates.from_chart(n, x, coords.sign).synthesize(spec))

    f0 = f(x0)
    eye = np.eye(size) * step
    plus = [f(x0 + eye[i]) for i in range(size)]
    minus = [f(x0 - eye[i]) for i in range(size)]
    matrix = np.zeros((size, size))
    for i in range(size):
        matrix[i, i] = (plus[i] - 2.0 * f0 + minus[i]) / step**2
        for j in range(i + 1, size):
            mixed = (
                f(x0 + eye[i] + eye[j])
                - f(x0 + eye[i] - eye[j])
                - f(x0 - eye[i] + eye[j])
                + f(x0 - eye[i] - eye[j])
            ) / (4.0 * step**2)
            matrix[i, j] = matrix[j, i] = mixed
    matrix = (matrix + matrix.T) / 2.0
    minors = np.array([np.linalg.det(matrix[:k, :k]) for k in range(1, size + 1)])

    e = spec.energies
    predicted = 2.0 * np.concatenate([e[n] - e[:n], e[n + 1 :] - e[n]])
    predicted_minors = np.cumprod(predicted)

    perp_energies = []
    for phi_i in problem.lower_approximants:
        try:
            perp_energies.append(energy(problem.H, collect_perp(spec, phi_i, n)))
        except NoHigherComponent:
            perp_energies.append(None)

    return HessianReport(
        n=n,
        coordinates=x0,
        matrix=matrix,
        principal_minors=minors,
        predicted_diagonal=predicted,
        predicted_minors=predicted_minors,
        predicted_minors_printed=predicted_minors / 2.0,
        perp_energies=perp_energies,
        step=step,
    )


@dataclass(frozen=True)
class SteepeningParams:
    """
    Parameters of the steepened functional F = Omega_n + |Omega_n - E_f| / |E_f T|.

    Parameters
    ----------
    scale_N : float
        Multiplier N >= 1 applied to F.
    curvature_T : float
        Scale T > 0, of the order of the curvature radius of Omega_n.
    e_f : float
        The auxiliary energy E_f.

    """

    scale_N: float = 1.0
    curvature_T: float = 1.0
    e_f: float = -1.0

    def __post_init__(self):
        if not np.isfinite(self.scale_N) or self.scale_N < 1.0:
            raise InvalidParameters(f"scale_N must be finite and >= 1, got {self.scale_N!r}.")
        if not np.isfinite(self.curvature_T) or self.curvature_T <= 0.0:
            raise InvalidParameters(f"curvature_T must be finite and > 0, got {self.curvature_T!r}.")
        if not np.isfinite(self.e_f):
            raise InvalidParameters(f"e_f must be finite, got {self.e_f!r}.")

    @classmethod
    def from_curvature(cls, curvature: float, e_f: float, scale_N: float = 1.0) -> "SteepeningParams":
        """Use the default T = 1 / max(1, curvature)."""
        return cls(scale_N=scale_N, curvature_T=1.0 / max(1.0, curvature), e_f=e_f)

    def with_e_f(self, e_f: float) -> "SteepeningParams":
        return SteepeningParams(scale_N=self.scale_N, curvature_T=self.curvature_T, e_f=e_f)

    @property
    def penalty_weight(self) -> float:
        """1 / |E_f T|."""
        if abs(self.e_f) < EF_FLOOR:
            raise ZeroEf(f"E_f = {self.e_f!r} is zero.")
        return 1.0 / abs(self.e_f * self.curvature_T)


def steepened_from_omega(value: float, params: SteepeningParams, scaled: bool = True) -> float:
    """F for a known Omega_n value."""
    raw = value + abs(value - params.e_f) * params.penalty_weight
    return params.scale_N * raw if scaled else raw


def steepened(problem: OmegaProblem, phi_n: StateVector, params: SteepeningParams, scaled: bool = True) -> float:
    """
    The steepened functional.

    Returns N * (Omega_n + |Omega_n - E_f| / |E_f T|); with ``scaled=False``
    the raw F without the multiplier N.

    Raises
    ------
    ZeroEf
        If |E_f| < 1e-300.

    """
    return steepened_from_omega(omega(problem, phi_n), params, scaled=scaled)


class GradientCheck(NamedTuple):
    analytic: np.ndarray
    finite_difference: np.ndarray
    relative_error: float


def gradient_check(problem: OmegaProblem, phi_n: StateVector, step: float = 1e-6) -> GradientCheck:
    """
    Compare ``omega_gradient`` with central differences along projected coordinate directions.

    Component k of both vectors is the derivative of Omega_n along the
    tangent t_k = e_k - <phi_n|e_k> phi_n, following normalize(phi_n + h t_k).
    """
    x = phi_n.components
    g = omega_gradient(problem, phi_n)
    analytic = np.zeros(problem.dim)
    numeric = np.zeros(problem.dim)
    for k in range(problem.dim):
        t = project_tangent(phi_n, np.eye(problem.dim)[k])
        f_plus = omega(problem, StateVector.normalized(x + step * t))
        f_minus = omega(problem, StateVector.normalized(x - step * t))
        numeric[k] = (f_plus - f_minus) / (2.0 * step)
        analytic[k] = g @ t
    error = float(np.linalg.norm(numeric - analytic) / max(np.linalg.norm(analytic), 1e-12))
    return GradientCheck(analytic=analytic, finite_difference=numeric, relative_error=error)
