"""Tests for states, operators and the exact eigenbasis."""

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, seed, settings
from hypothesis import strategies as st

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
from omega.process import generate_random_model
from omega.space import (
    EigenbasisCoordinates,
    StateVector,
    SymmetricOperator,
    energy,
    energy_step_difference,
    gram_schmidt_against,
    orthonormalize,
    spectral_decompose,
    subspace_eigenpairs,
    to_eigenbasis,
)


def test_state_vector_requires_unit_norm():
    with pytest.raises(NotNormalized):
        StateVector([1.0, 1.0])
    state = StateVector.normalized([3.0, 4.0])
    assert state.components == pytest.approx([0.6, 0.8])
    assert state.dim == 2


def test_state_vector_is_read_only():
    state = StateVector.basis(3, 1)
    with pytest.raises(ValueError):
        state.components[0] = 1.0


def test_zero_vector_cannot_be_normalized():
    with pytest.raises(NotNormalized):
        StateVector.normalized([0.0, 0.0])


def test_operator_demands_exact_symmetry():
    with pytest.raises(AsymmetricMatrix):
        SymmetricOperator(np.array([[1.0, 2.0], [2.0 + 1e-14, 1.0]]))
    H = SymmetricOperator.from_entries([[1.0, 2.0], [2.0 + 1e-14, 1.0]])
    assert np.array_equal(H.entries, H.entries.T)
    with pytest.raises(AsymmetricMatrix):
        SymmetricOperator.from_entries([[1.0, 2.0], [2.1, 1.0]])


def test_operator_shape_checks():
    with pytest.raises(DimensionMismatch):
        SymmetricOperator(np.zeros((2, 3)))
    with pytest.raises(InvalidParameters):
        SymmetricOperator(np.zeros((1, 1)))


def test_energy_dimension_mismatch(he):
    with pytest.raises(DimensionMismatch):
        energy(he.H, StateVector.basis(2, 0))


def test_he_energies(he):
    assert energy(he.H, he.phi0) == pytest.approx(-2.817, abs=1e-12)
    assert energy(he.H, he.phi1) == pytest.approx(-2.146, abs=1e-12)
    assert he.spec.energies == pytest.approx([-2.903, -2.146, -2.06], abs=1e-15)


@pytest.mark.parametrize("dim", [2, 3, 6, 10])
def test_spectral_decompose_matches_lapack(dim):
    H = generate_random_model(dim, seed=dim)
    spec = spectral_decompose(H)
    reference = scipy.linalg.eigh(H.entries, eigvals_only=True)
    assert spec.energies == pytest.approx(reference, abs=1e-10)
    assert np.all(np.diff(spec.energies) > 0)
    assert np.allclose(spec.vectors.T @ spec.vectors, np.eye(dim), atol=1e-12)
    assert np.allclose(spec.reconstruct(), H.entries, atol=1e-11)
    for i in range(dim):
        residual = H.entries @ spec.vectors[:, i] - spec.energies[i] * spec.vectors[:, i]
        assert np.linalg.norm(residual) < 1e-10


def test_eigenvector_signs_are_deterministic():
    spec = spectral_decompose(generate_random_model(5, seed=3))
    for i in range(5):
        column = spec.vectors[:, i]
        first = column[np.flatnonzero(np.abs(column) > 1e-10)[0]]
        assert first > 0


def test_degenerate_spectrum_is_rejected():
    with pytest.raises(DegenerateSpectrum, match=r"Eigenvalues 1\.0 and 1\.0") as info:
        spectral_decompose(SymmetricOperator.diagonal([1.0, 1.0, 2.0]))
    assert "np.float64" not in str(info.value)


def test_energy_step_difference_matches_direct_difference(random_system, rng):
    H, _ = random_system(7, dim=6)
    phi = StateVector.normalized(rng.normal(size=6))
    step = 0.1 * rng.normal(size=6)
    moved = StateVector.normalized(phi.components + step)
    assert energy_step_difference(H, phi, step) == pytest.approx(energy(H, moved) - energy(H, phi), abs=1e-12)


def test_energy_step_difference_resolves_tiny_steps(he):
    # Along psi0 from psi1 the change is |v|^2 (E0 - E1) up to 1/(1 + |v|^2).
    step = 1e-9 * he.spec.state(0).components
    expected = 1e-18 * (he.spec.energies[0] - he.spec.energies[1])
    assert energy_step_difference(he.H, he.spec.state(1), step) == pytest.approx(expected, rel=1e-4)


def test_energy_step_difference_dimension_mismatch(he):
    with pytest.raises(DimensionMismatch):
        energy_step_difference(he.H, he.phi0, np.zeros(2))


def test_gram_schmidt_against():
    chi = StateVector.normalized([1.0, 1.0, 0.0])
    phi = StateVector.normalized([1.0, 0.0, 1.0])
    result = gram_schmidt_against(phi, chi)
    assert abs(result.overlap(chi)) < 1e-14
    with pytest.raises(ParallelStates):
        gram_schmidt_against(chi, -chi)


def test_orthonormalize_drops_dependent_vectors():
    vectors = [np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), np.array([0.0, 2.0, 0.0])]
    with pytest.raises(IllConditionedBasis):
        orthonormalize(vectors)
    q = orthonormalize(vectors, drop_tol=1e-10)
    assert q.shape == (3, 2)
    assert np.allclose(q.T @ q, np.eye(2))


def test_subspace_eigenpairs_full_basis_is_exact():
    H = generate_random_model(5, seed=11)
    spec = spectral_decompose(H)
    basis = [StateVector.basis(5, k) for k in range(5)]
    values, vectors = subspace_eigenpairs(H, basis)
    assert values == pytest.approx(spec.energies, abs=1e-10)
    for value, vector in zip(values, vectors):
        assert energy(H, vector) == pytest.approx(value, abs=1e-10)


def test_subspace_eigenpairs_rejects_bad_bases(he):
    with pytest.raises(IllConditionedBasis):
        subspace_eigenpairs(he.H, [])
    with pytest.raises(IllConditionedBasis):
        subspace_eigenpairs(he.H, [he.phi0, he.phi0])


def test_to_eigenbasis_sign_convention(he):
    coords = to_eigenbasis(-he.spec.state(1), he.spec, 1)
    assert coords.sign == -1.0
    assert coords.principal == pytest.approx(1.0)
    assert coords.synthesize(he.spec).components == pytest.approx((-he.spec.state(1)).components)


def test_to_eigenbasis_zero_principal(he):
    coords = to_eigenbasis(-he.phi1, he.spec, 1)
    assert coords.principal == 0.0
    assert coords.coefficients()[0] > 0
    assert coords.synthesize(he.spec).components == pytest.approx((-he.phi1).components, abs=1e-15)


def test_chart_out_of_range():
    with pytest.raises(ChartOutOfRange):
        EigenbasisCoordinates(n=1, coeffs_low=[0.9], coeffs_high=[0.9])
    with pytest.raises(DimensionMismatch):
        EigenbasisCoordinates(n=2, coeffs_low=[0.1], coeffs_high=[0.1])


@seed(20240611)
@settings(max_examples=50, deadline=None)
@given(model_seed=st.integers(0, 2**31 - 1), dim=st.integers(2, 8), data=st.data())
def test_eigenbasis_expansion_reproduces_state(model_seed, dim, data):
    n = data.draw(st.integers(0, dim - 1))
    spec = spectral_decompose(generate_random_model(dim, model_seed))
    rng = np.random.default_rng(model_seed)
    phi = StateVector.normalized(rng.normal(size=dim))
    coords = to_eigenbasis(phi, spec, n)
    assert np.sum(coords.coefficients() ** 2) == pytest.approx(1.0, abs=1e-12)
    assert coords.principal >= -1e-10
    assert np.allclose(coords.synthesize(spec).components, phi.components, atol=1e-12)
