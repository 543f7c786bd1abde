"""Tests for the Omega_n functional, its gradient, Hessian and steepened form."""

import numpy as np
import pytest

from omega.errors import (
    EnergyOrderingViolation,
    InvalidParameters,
    NoHigherComponent,
    OverlapSaturation,
    ParallelStates,
    ZeroEf,
)
from omega.functional import (
    OmegaProblem,
    SteepeningParams,
    collect_perp,
    gradient_check,
    leading_order_elements,
    lower_part_estimate,
    omega,
    omega_gradient,
    omega_hessian,
    omega_step_difference,
    saddle_decompose,
    steepened,
)
from omega.process import perturb_state
from omega.space import StateVector, energy


def valid_problem(H, spec, rng, n, angle=0.1):
    """Lower approximants near psi_0 .. psi_{n-1}."""
    lower = tuple(perturb_state(spec.state(i), rng, angle) for i in range(n))
    return OmegaProblem(H, lower)


def test_omega_zero_is_the_energy(he):
    problem = OmegaProblem(he.H)
    assert problem.n == 0
    for phi in (he.phi0, he.phi1, he.spec.state(2)):
        assert omega(problem, phi) == pytest.approx(energy(he.H, phi), abs=1e-15)


def test_problem_validation(he):
    with pytest.raises(InvalidParameters):
        OmegaProblem(he.H, (he.phi0,), n=2)
    with pytest.raises(ParallelStates):
        OmegaProblem(he.H, (he.phi0, -he.phi0))


def test_energy_ordering_violation(he):
    problem = OmegaProblem(he.H, (he.phi0,))
    with pytest.raises(EnergyOrderingViolation):
        omega(problem, he.spec.state(0))
    with pytest.raises(EnergyOrderingViolation):
        omega(problem, he.phi0)


def test_overlap_saturation(he):
    psi0, psi2 = he.spec.state(0), he.spec.state(2)
    lower = (
        StateVector.normalized(psi0.components + psi2.components),
        StateVector.normalized(psi0.components - psi2.components),
    )
    problem = OmegaProblem(he.H, lower)
    with pytest.raises(OverlapSaturation):
        omega(problem, psi2)


def test_omega_equals_level_energy_at_eigenstates(random_system, rng):
    checked = 0
    for model_seed in range(50):
        H, spec = random_system(model_seed, dim=3 + model_seed % 8)
        for n in (1, 2):
            problem = valid_problem(H, spec, rng, n)
            try:
                value = omega(problem, spec.state(n))
            except (EnergyOrderingViolation, OverlapSaturation):
                continue
            checked += 1
            assert value == pytest.approx(spec.energies[n], abs=1e-12 * max(1.0, abs(spec.energies[n])))
    assert checked > 50


def test_he_omega_at_psi1(he):
    problem = OmegaProblem(he.H, (he.phi0,))
    assert omega(problem, he.spec.state(1)) == pytest.approx(-2.146, abs=1e-14)


def test_lower_part_without_higher_weight(he):
    # phi0 = psi0 and phi_n in span(psi0, psi1): lower part equals P_L (1 - s^2).
    problem = OmegaProblem(he.H, (he.spec.state(0),))
    c = 0.2
    phi = StateVector.normalized([c, np.sqrt(1 - c * c), 0.0])
    saddle = saddle_decompose(he.spec, phi, 1)
    assert lower_part_estimate(problem, phi) == pytest.approx(saddle.p_low * (1 - c * c), rel=1e-12)


def test_saddle_decomposition_he(he):
    saddle = saddle_decompose(he.spec, he.phi0, 1)
    e0, e1, e2 = -2.903, -2.146, -2.06
    assert saddle.p_low == pytest.approx((e1 - e0) ** 2 / (e2 - e0), abs=1e-12)
    assert saddle.p_high == pytest.approx((e2 - e1) ** 2 / (e2 - e0), abs=1e-12)
    assert saddle.e_phi_n == pytest.approx(-2.817, abs=1e-12)
    assert saddle.paraboloid == pytest.approx(saddle.e_phi_n + 2 * saddle.p_low, abs=1e-12)


def test_saddle_decomposition_random(random_system, rng):
    H, spec = random_system(7, dim=6)
    for n in range(6):
        phi = StateVector.normalized(rng.normal(size=6))
        saddle = saddle_decompose(spec, phi, n)
        assert saddle.p_low >= 0 and saddle.p_high >= 0
        assert saddle.e_phi_n == pytest.approx(energy(H, phi), abs=1e-11)


def test_step_difference_matches_direct_difference(random_system, rng):
    for model_seed in range(20):
        H, spec = random_system(200 + model_seed, dim=4 + model_seed % 4, min_gap=0.5)
        problem = valid_problem(H, spec, rng, 1)
        phi = perturb_state(spec.state(1), rng, 0.05)
        step = 0.01 * rng.standard_normal(H.dim)
        direct = omega(problem, StateVector.normalized(phi.components + step)) - omega(problem, phi)
        assert omega_step_difference(problem, phi, step) == pytest.approx(direct, abs=1e-12 * max(1.0, H.norm))


def test_step_difference_resolves_descent_near_minimum(he):
    # phi1 within 1e-8 of psi1: x' - x loses these decreases to rounding.
    problem = OmegaProblem(he.H, (he.phi0,))
    phi = StateVector.normalized([-4.5e-9, 1.0, -5.33e-8])
    g = omega_gradient(problem, phi)
    g2 = float(g @ g)
    assert g2 > 0.0
    for t in (1.0, 1e-2, 1e-4):
        assert omega_step_difference(problem, phi, -t * g) <= -1e-4 * t * g2


def test_step_difference_raises_on_ordering_violation(he):
    problem = OmegaProblem(he.H, (he.phi0,))
    with pytest.raises(EnergyOrderingViolation):
        omega_step_difference(problem, he.spec.state(1), np.array([100.0, 0.0, 0.0]))


def test_gradient_matches_finite_differences(random_system, rng):
    checked = 0
    for model_seed in range(40):
        H, spec = random_system(100 + model_seed, dim=3 + model_seed % 6)
        problem = valid_problem(H, spec, rng, 1 + model_seed % 2)
        for _ in range(5):
            phi = StateVector.normalized(rng.normal(size=H.dim))
            try:
                omega(problem, phi)
            except (EnergyOrderingViolation, OverlapSaturation):
                continue
            if min(energy(H, phi) - problem.lower_energies) < 0.05:
                continue
            checked += 1
            assert gradient_check(problem, phi).relative_error < 1e-5
    assert checked > 50


def test_gradient_is_tangent(he, rng):
    problem = OmegaProblem(he.H, (he.phi0,))
    phi = perturb_state(he.spec.state(2), rng, 0.3)
    assert abs(omega_gradient(problem, phi) @ phi.components) < 1e-12


def test_gradient_vanishes_at_eigenstates(random_system, rng):
    for model_seed in range(20):
        H, spec = random_system(200 + model_seed, dim=5, min_gap=0.5)
        problem = valid_problem(H, spec, rng, 1)
        for k in range(1, 5):
            try:
                g = omega_gradient(problem, spec.state(k))
            except (EnergyOrderingViolation, OverlapSaturation):
                continue
            assert np.linalg.norm(g) < 1e-9


def test_collect_perp(he):
    perp = collect_perp(he.spec, he.phi0, 1)
    assert perp.components == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)
    with pytest.raises(NoHigherComponent):
        collect_perp(he.spec, he.spec.state(0), 1)


def test_leading_order_elements_exact_pair(he):
    elements = leading_order_elements(he.spec, he.spec.state(0), 0, he.spec.state(1), 1)
    assert elements.overlap == pytest.approx(0.0, abs=1e-15)
    assert elements.overlap_leading == pytest.approx(0.0, abs=1e-15)
    assert elements.coupling == pytest.approx(0.0, abs=1e-15)


def test_leading_order_elements_are_second_order(random_system, rng):
    H, spec = random_system(9, dim=6)
    delta = 1e-3
    phi0 = perturb_state(spec.state(0), rng, delta)
    phi1 = perturb_state(spec.state(1), rng, delta)
    elements = leading_order_elements(spec, phi0, 0, phi1, 1)
    assert abs(elements.overlap - elements.overlap_leading) < 1e-5
    assert abs(elements.coupling - elements.coupling_leading) < 1e-4


def test_hessian_he_at_psi1(he):
    problem = OmegaProblem(he.H, (he.spec.state(0),))
    report = omega_hessian(problem, he.spec, he.spec.state(1))
    assert report.predicted_diagonal == pytest.approx([1.514, 0.172], abs=1e-12)
    assert np.diag(report.matrix) == pytest.approx([1.514, 0.172], abs=1e-4)
    assert report.matrix[0, 1] == pytest.approx(0.0, abs=1e-4)
    assert report.predicted_minors == pytest.approx([1.514, 1.514 * 0.172], abs=1e-12)
    assert report.predicted_minors_printed == pytest.approx(report.predicted_minors / 2)
    assert report.positive_definite
    assert report.perp_energies == [None]


def test_hessian_with_he_phi0(he):
    problem = OmegaProblem(he.H, (he.phi0,))
    report = omega_hessian(problem, he.spec, he.spec.state(1))
    assert report.positive_definite
    assert report.perp_energies[0] == pytest.approx(-2.06, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_hessian_positive_definite_near_exact_approximants(random_system, rng, n):
    for model_seed in range(20):
        H, spec = random_system(300 + model_seed, dim=3 + model_seed % 4, min_gap=1.0)
        problem = valid_problem(H, spec, rng, n)
        try:
            report = omega_hessian(problem, spec, spec.state(n))
        except (EnergyOrderingViolation, OverlapSaturation):
            continue
        assert report.positive_definite
        assert np.all(report.predicted_minors > 0)


def test_hessian_matches_prediction_with_exact_approximants(random_system):
    H, spec = random_system(12, dim=5, min_gap=0.5)
    problem = OmegaProblem(H, (spec.state(0), spec.state(1)))
    report = omega_hessian(problem, spec, spec.state(2))
    assert np.diag(report.matrix) == pytest.approx(report.predicted_diagonal, abs=1e-4 * max(1.0, H.norm))


def test_steepened_at_e_f_equal_omega(he):
    problem = OmegaProblem(he.H, (he.phi0,))
    phi = he.spec.state(1)
    value = omega(problem, phi)
    params = SteepeningParams(scale_N=1.0, curvature_T=0.5, e_f=value)
    assert steepened(problem, phi, params) == pytest.approx(value, abs=1e-15)
    doubled = SteepeningParams(scale_N=2.0, curvature_T=0.5, e_f=value)
    assert steepened(problem, phi, doubled) == pytest.approx(2 * value, abs=1e-14)
    assert steepened(problem, phi, doubled, scaled=False) == pytest.approx(value, abs=1e-15)


def test_steepened_penalty(he):
    problem = OmegaProblem(he.H, (he.phi0,))
    phi = he.spec.state(1)
    params = SteepeningParams(scale_N=1.0, curvature_T=0.5, e_f=-2.0)
    expected = -2.146 + 0.146 / (2.0 * 0.5)
    assert steepened(problem, phi, params) == pytest.approx(expected, abs=1e-12)


def test_steepening_params_validation(he):
    with pytest.raises(InvalidParameters):
        SteepeningParams(scale_N=0.5)
    with pytest.raises(InvalidParameters):
        SteepeningParams(curvature_T=0.0)
    with pytest.raises(ZeroEf):
        steepened(OmegaProblem(he.H, (he.phi0,)), he.spec.state(1), SteepeningParams(e_f=0.0))
    assert SteepeningParams.from_curvature(4.0, -2.0).curvature_T == 0.25
    assert SteepeningParams.from_curvature(0.2, -2.0).curvature_T == 1.0


def test_eckart_bound_for_omega_zero(random_system, rng):
    for model_seed in range(30):
        H, spec = random_system(400 + model_seed, dim=3 + model_seed % 6)
        problem = OmegaProblem(H)
        psi0 = spec.state(0)
        gap = spec.energies[1] - spec.energies[0]
        assert omega(problem, psi0) == pytest.approx(spec.energies[0], abs=1e-12 * max(1.0, H.norm))
        assert omega(problem, -psi0) == pytest.approx(spec.energies[0], abs=1e-12 * max(1.0, H.norm))
        for angle in (1e-3, 0.1, 1.0):
            phi = perturb_state(psi0, rng, angle)
            excess = omega(problem, phi) - spec.energies[0]
            assert excess >= gap * (1.0 - psi0.overlap(phi) ** 2) - 1e-12 * max(1.0, H.norm)
            assert excess > 0.0


def omega_is_local_minimum(problem, psi_n, rng, count=64, radius=1e-2):
    center = omega(problem, psi_n)
    return all(omega(problem, perturb_state(psi_n, rng, radius)) > center for _ in range(count))


def test_he_psi1_is_local_minimum(he, rng):
    problem = OmegaProblem(he.H, (he.phi0,))
    assert omega_is_local_minimum(problem, he.spec.state(1), rng)


@pytest.mark.parametrize("n", [1, 2])
def test_eigenstate_is_local_minimum_near_exact_approximants(random_system, rng, n):
    for model_seed in range(100):
        H, spec = random_system(1300 + model_seed, dim=4 + model_seed % 5, min_gap=1.0)
        problem = valid_problem(H, spec, rng, n)
        assert omega_is_local_minimum(problem, spec.state(n), rng)
