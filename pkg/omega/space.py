"""Finite-dimensional model Hilbert spaces: states, operators and exact spectra."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from omega.errors import (
    AsymmetricMatrix,
    ChartOutOfRange,
    DegenerateSpectrum,
    DimensionMismatch,
    IllConditionedBasis,
    InvalidParameters,
    NotNormalized,
    ParallelStates,
)

logger = logging.getLogger(__name__)

NORM_TOL = 1e-12
DEGENERACY_GUARD = 1e-8
SIGN_THRESHOLD = 1e-10
CONDITION_LIMIT = 1e12
SYMMETRY_TOL = 1e-12
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 64
PARALLEL_TOL = 1e-12


def check_dims(*dims: int) -> None:
    """Raise DimensionMismatch unless all dimensions agree."""
    if len(set(dims)) > 1:
        raise DimensionMismatch(f"Dimensions do not match: {dims}.")


@dataclass(frozen=True, eq=False)
class StateVector:
    """
    A normalized real state in the computational basis.

    Parameters
    ----------
    components : array_like
        Real components. Their Euclidean norm must be 1 within ``NORM_TOL``.

    Raises
    ------
    NotNormalized
        If the vector is not of unit norm.

    """

    components: np.ndarray

    def __post_init__(self):
        comps = np.array(self.components, dtype=float).reshape(-1)
        if comps.size == 0:
            raise InvalidParameters("A state needs at least one component.")
        norm = np.linalg.norm(comps)
        if not np.isfinite(norm) or abs(norm - 1.0) > NORM_TOL:
            raise NotNormalized(f"State norm is {float(norm)!r}, expected 1 within {NORM_TOL}.")
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    @classmethod
    def normalized(cls, values) -> "StateVector":
        """Build a state from any nonzero vector by dividing out its norm."""
        arr = np.asarray(values, dtype=float).reshape(-1)
        norm = np.linalg.norm(arr)
        if norm == 0.0 or not np.isfinite(norm):
            raise NotNormalized("Cannot normalize a zero or non-finite vector.")
        return cls(arr / norm)

    @classmethod
    def basis(cls, dim: int, index: int) -> "StateVector":
        """The computational basis vector ``e_index`` of dimension ``dim``."""
        vec = np.zeros(dim)
        vec[index] = 1.0
        return cls(vec)

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def overlap(self, other: "StateVector") -> float:
        """The real inner product <self|other>."""
        check_dims(self.dim, other.dim)
        return float(self.components @ other.components)

    def __neg__(self) -> "StateVector":
        return StateVector(-self.components)


@dataclass(frozen=True, eq=False)
class SymmetricOperator:
    """
    A Hamiltonian stored as a dense real symmetric matrix.

    The constructor demands exact symmetry. Use :meth:`from_entries` for
    data that carries rounding noise.

    Parameters
    ----------
    entries : array_like
        Square matrix, dimension at least 2, energy units (hartree).

    """

    entries: np.ndarray

    def __post_init__(self):
        mat = np.array(self.entries, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"Operator must be square, got shape {mat.shape}.")
        if mat.shape[0] < 2:
            raise InvalidParameters(f"Operator dimension must be at least 2, got {mat.shape[0]}.")
        if not np.all(np.isfinite(mat)):
            raise InvalidParameters("Operator entries must be finite.")
        if not np.array_equal(mat, mat.T):
            raise AsymmetricMatrix("Operator entries are not exactly symmetric.")
        mat.setflags(write=False)
        object.__setattr__(self, "entries", mat)

    @classmethod
    def from_entries(cls, entries, tol: float = SYMMETRY_TOL) -> "SymmetricOperator":
        """
        Build an operator from nearly symmetric data.

        Asymmetry up to ``tol`` (max absolute difference) is removed by
        taking (A + A^T)/2; anything larger is rejected.

        Raises
        ------
        AsymmetricMatrix
            If max|A - A^T| exceeds ``tol``.

        """
        mat = np.asarray(entries, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"Operator must be square, got shape {mat.shape}.")
        asymmetry = float(np.max(np.abs(mat - mat.T))) if mat.size else 0.0
        if asymmetry > tol:
            raise AsymmetricMatrix(f"Asymmetry {asymmetry:.3e} exceeds tolerance {tol:.1e}.")
        return cls((mat + mat.T) / 2.0)

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "SymmetricOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self.entries))

    def apply(self, state: StateVector) -> np.ndarray:
        """Return H|state> as a plain vector."""
        check_dims(self.dim, state.dim)
        return self.entries @ state.components

    def matrix_element(self, bra: StateVector, ket: StateVector) -> float:
        """Return <bra|H|ket>."""
        check_dims(self.dim, bra.dim, ket.dim)
        return float(bra.components @ self.entries @ ket.components)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """
    Exact eigenpairs of a non-degenerate operator.

    Parameters
    ----------
    energies : np.ndarray
        Strictly ascending eigenvalues.
    vectors : np.ndarray
        Orthonormal eigenvectors as columns, aligned with ``energies``.

    """

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    @property
    def eigenvectors(self) -> List[StateVector]:
        return [self.state(i) for i in range(self.dim)]

    def state(self, index: int) -> StateVector:
        """The eigenstate psi_index."""
        return StateVector(self.vectors[:, index])

    def overlaps(self, phi: StateVector) -> np.ndarray:
        """All <psi_i|phi>."""
        check_dims(self.dim, phi.dim)
        return self.vectors.T @ phi.components

    def reconstruct(self) -> np.ndarray:
        """Sum_i E_i psi_i psi_i^T."""
        return (self.vectors * self.energies) @ self.vectors.T


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that the first component above SIGN_THRESHOLD is positive."""
    fixed = np.array(vectors, dtype=float)
    for col in range(fixed.shape[1]):
        significant = np.flatnonzero(np.abs(fixed[:, col]) > SIGN_THRESHOLD)
        if significant.size and fixed[significant[0], col] < 0:
            fixed[:, col] = -fixed[:, col]
    return fixed


def jacobi_eigh(matrix, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray]:
    """
    Diagonalize a dense symmetric matrix with cyclic Jacobi rotations.

    Parameters
    ----------
    matrix : array_like
        Symmetric matrix (any size >= 1).
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm is below
        ``tol * ||matrix||``.
    max_sweeps : int
        Upper bound on the number of cyclic sweeps.

    Returns
    -------
    values : np.ndarray
        Eigenvalues in ascending order.
    vectors : np.ndarray
        Orthonormal eigenvectors as columns, sign-normalized.

    Notes
    -----
    Rotation angles follow the stable tangent formula
    t = sgn(theta)/(|theta| + sqrt(theta^2 + 1)), theta = (a_qq - a_pp)/(2 a_pq).

    """
    a = np.array(matrix, dtype=float)
    size = a.shape[0]
    v = np.eye(size)
    scale = np.linalg.norm(a)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(size - 1):
            for q in range(p + 1, size):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        logger.warning(f"   > Jacobi did not converge within {max_sweeps} sweeps.")
    logger.debug(f"   > Jacobi finished a {size}x{size} matrix in {sweeps} sweeps.")

    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], fix_signs(v[:, order])


def spectral_decompose(H: SymmetricOperator) -> SpectralDecomposition:
    """
    Exact eigenpairs of H, ascending, with deterministic signs.

    Raises
    ------
    DegenerateSpectrum
        If any adjacent gap is below ``DEGENERACY_GUARD``.

    """
    values, vectors = jacobi_eigh(H.entries)
    gaps = np.diff(values)
    if gaps.size and gaps.min() < DEGENERACY_GUARD:
        index = int(np.argmin(gaps))
        raise DegenerateSpectrum(
            f"Eigenvalues {float(values[index])!r} and {float(values[index + 1])!r} are closer than {DEGENERACY_GUARD}."
        )
    return SpectralDecomposition(energies=values, vectors=vectors)


def energy(H: SymmetricOperator, phi: StateVector) -> float:
    """The energy E(phi) = <phi|H|phi>."""
    return H.matrix_element(phi, phi)


def energy_step_difference(H: SymmetricOperator, phi: StateVector, displacement: np.ndarray) -> float:
    """
    E((phi + v)/|phi + v|) - E(phi) for a displacement v, without cancellation.

    Expands to (2 v.(H phi - E phi) + v.H v - |v|^2 E) / |phi + v|^2, so the
    result keeps relative accuracy when v is tiny.
    """
    check_dims(H.dim, phi.dim, np.shape(displacement)[0])
    x = phi.components
    v = np.asarray(displacement, dtype=float)
    h_phi = H.entries @ x
    e_phi = float(x @ h_phi)
    vv = float(v @ v)
    scale2 = 1.0 + 2.0 * float(x @ v) + vv
    return (2.0 * float(v @ (h_phi - e_phi * x)) + float(v @ (H.entries @ v)) - vv * e_phi) / scale2


def gram_schmidt_against(phi: StateVector, chi: StateVector) -> StateVector:
    """
    Remove the chi component from phi and renormalize.

    Returns (phi - chi<chi|phi>)/sqrt(1 - <chi|phi>^2).

    Raises
    ------
    ParallelStates
        If <chi|phi>^2 >= 1 - 1e-12.

    """
    overlap = chi.overlap(phi)
    if overlap * overlap >= 1.0 - PARALLEL_TOL:
        raise ParallelStates(f"States are parallel, overlap {overlap!r}.")
    residual = phi.components - overlap * chi.components
    # Re-project once to clean rounding left by a large overlap.
    residual = residual - (chi.components @ residual) * chi.components
    return StateVector.normalized(residual)


def _as_columns(vectors: Sequence[Union[StateVector, np.ndarray]]) -> np.ndarray:
    columns = [v.components if isinstance(v, StateVector) else np.asarray(v, dtype=float) for v in vectors]
    check_dims(*(c.shape[0] for c in columns))
    return np.column_stack(columns)


def orthonormalize(vectors: Sequence[Union[StateVector, np.ndarray]], drop_tol: Optional[float] = None) -> np.ndarray:
    """
    Modified Gram-Schmidt with one re-orthogonalization pass.

    Parameters
    ----------
    vectors : sequence of StateVector or array
        Vectors to orthonormalize, in order.
    drop_tol : float, optional
        If given, vectors whose remaining norm falls below it are dropped
        instead of raising.

    Returns
    -------
    np.ndarray
        Orthonormal columns spanning the same space.

    """
    columns = _as_columns(vectors)
    basis = []
    for col in columns.T:
        w = col.copy()
        for _ in range(2):
            for q in basis:
                w -= (q @ w) * q
        norm = np.linalg.norm(w)
        if drop_tol is not None and norm < drop_tol:
            continue
        if norm == 0.0:
            raise IllConditionedBasis("Basis contains a linearly dependent vector.")
        basis.append(w / norm)
    if not basis:
        return np.zeros((columns.shape[0], 0))
    return np.column_stack(basis)


def subspace_eigenpairs(H: SymmetricOperator, basis: Sequence[StateVector]) -> Tuple[np.ndarray, List[StateVector]]:
    """
    Rayleigh-Ritz eigenpairs of H restricted to span(basis).

    Parameters
    ----------
    H : SymmetricOperator
        The Hamiltonian.
    basis : sequence of StateVector
        Linearly independent trial vectors.

    Returns
    -------
    energies : np.ndarray
        Ritz values, ascending.
    vectors : list of StateVector
        Orthonormal Ritz vectors expressed in the full space.

    Raises
    ------
    IllConditionedBasis
        If the basis is empty or its Gram matrix has condition number above 1e12.

    """
    if len(basis) == 0:
        raise IllConditionedBasis("Trial basis is empty.")
    columns = _as_columns(basis)
    check_dims(H.dim, columns.shape[0])
    gram = columns.T @ columns
    condition = np.linalg.cond(gram)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise IllConditionedBasis(f"Gram matrix condition number {condition:.3e} exceeds {CONDITION_LIMIT:.0e}.")

    q = orthonormalize(basis)
    reduced = q.T @ H.entries @ q
    reduced = (reduced + reduced.T) / 2.0
    values, coefficients = jacobi_eigh(reduced)
    ritz = fix_signs(q @ coefficients)
    ritz = ritz / np.linalg.norm(ritz, axis=0)
    return values, [StateVector(col) for col in ritz.T]


@dataclass(frozen=True, eq=False)
class EigenbasisCoordinates:
    """
    A trial state expanded in the exact eigenbasis around level ``n``.

    The principal coefficient <psi_n|phi> is eliminated by normalization,
    so ``chart`` (lower then higher overlaps) is a coordinate chart of the
    unit sphere around psi_n.

    Parameters
    ----------
    n : int
        Target level.
    coeffs_low : np.ndarray
        <psi_i|phi> for i < n.
    coeffs_high : np.ndarray
        <psi_i|phi> for i > n.
    measured_principal : float, optional
        The measured <psi_n|phi>; when omitted it follows from normalization.
    sign : float
        Global sign applied to phi before expansion (+1 or -1).

    """

    n: int
    coeffs_low: np.ndarray
    coeffs_high: np.ndarray
    measured_principal: Optional[float] = None
    sign: float = 1.0

    def __post_init__(self):
        low = np.array(self.coeffs_low, dtype=float).reshape(-1)
        high = np.array(self.coeffs_high, dtype=float).reshape(-1)
        if low.shape[0] != self.n:
            raise DimensionMismatch(f"Expected {self.n} lower coefficients, got {low.shape[0]}.")
        object.__setattr__(self, "coeffs_low", low)
        object.__setattr__(self, "coeffs_high", high)
        if self.radicand < -NORM_TOL:
            raise ChartOutOfRange(f"Coefficients leave the unit ball, radicand {self.radicand!r}.")

    @classmethod
    def from_chart(cls, n: int, chart, sign: float = 1.0) -> "EigenbasisCoordinates":
        chart = np.asarray(chart, dtype=float)
        return cls(n=n, coeffs_low=chart[:n], coeffs_high=chart[n:], sign=sign)

    @property
    def dim(self) -> int:
        return self.n + 1 + self.coeffs_high.shape[0]

    @property
    def radicand(self) -> float:
        return float(1.0 - np.sum(self.coeffs_low**2) - np.sum(self.coeffs_high**2))

    @property
    def principal(self) -> float:
        if self.measured_principal is not None:
            return self.measured_principal
        return float(np.sqrt(max(self.radicand, 0.0)))

    @property
    def chart(self) -> np.ndarray:
        return np.concatenate([self.coeffs_low, self.coeffs_high])

    def coefficients(self) -> np.ndarray:
        """All overlaps <psi_i|phi> in level order."""
        return np.concatenate([self.coeffs_low, [self.principal], self.coeffs_high])

    def synthesize(self, spec: SpectralDecomposition) -> StateVector:
        """Rebuild the state (with its original sign) from the coordinates."""
        check_dims(self.dim, spec.dim)
        return StateVector(self.sign * (spec.vectors @ self.coefficients()))


def to_eigenbasis(phi: StateVector, spec: SpectralDecomposition, n: int) -> EigenbasisCoordinates:
    """
    Expand phi in the eigenbasis around level n.

    A global sign flip makes <psi_n|phi> >= 0; when that overlap vanishes
    the first significant coefficient is made positive instead. The flip is
    kept in ``sign`` so that ``synthesize`` reproduces phi.

    """
    check_dims(phi.dim, spec.dim)
    if not 0 <= n < spec.dim:
        raise InvalidParameters(f"Level {n} is outside 0..{spec.dim - 1}.")
    coeffs = spec.overlaps(phi)
    sign = 1.0
    if coeffs[n] < -SIGN_THRESHOLD:
        sign = -1.0
    elif abs(coeffs[n]) <= SIGN_THRESHOLD:
        significant = np.flatnonzero(np.abs(coeffs) > SIGN_THRESHOLD)
        if significant.size and coeffs[significant[0]] < 0:
            sign = -1.0
    coeffs = sign * coeffs
    return EigenbasisCoordinates(
        n=n,
        coeffs_low=coeffs[:n],
        coeffs_high=coeffs[n + 1 :],
        measured_principal=float(coeffs[n]),
        sign=sign,
    )
